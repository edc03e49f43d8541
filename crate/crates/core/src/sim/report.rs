//! Run report, rebuilt from the event log alone.

use std::collections::BTreeMap;

use super::log::{LogRecord, Verdict};
use super::scenario::AttackKind;
use crate::energy::report::{energy_tables, mj, render_csv, render_text, EnergyInputs, Table, TrustIdSizing};
use crate::energy::{Energy, EnergyConstants, EnergyEvent, EnergyLedger};
use crate::ids::NodeId;
use crate::protocol::frame::MAX_PAYLOAD;
use crate::protocol::{on_air_len, FrameKind, Phase, RejectReason, Status};

#[derive(Clone, Debug, PartialEq)]
pub struct AttackRow {
    pub index: usize,
    pub at: u64,
    pub kind: AttackKind,
    pub verdict: Verdict,
    pub reasons: Vec<RejectReason>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimReport {
    pub scenario: String,
    pub seed: u64,
    pub profile: String,
    pub p_bits: u64,
    pub q_bits: u64,
    pub block_bits: u32,
    pub constants: EnergyConstants,
    pub phases: BTreeMap<NodeId, Phase>,
    pub ledgers: BTreeMap<NodeId, EnergyLedger>,
    /// Last trust list the base station issued to each node.
    pub issued: BTreeMap<NodeId, Vec<NodeId>>,
    pub rejects: BTreeMap<(NodeId, FrameKind, RejectReason), usize>,
    /// (initiator, responder) -> key confirmed by probe
    pub sessions: BTreeMap<(NodeId, NodeId), bool>,
    pub attacks: Vec<AttackRow>,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
    pub frames_sent: usize,
    pub frames_dropped: usize,
    pub bytes_on_air: usize,
    pub trust_list: Vec<NodeId>,
    pub statuses: BTreeMap<NodeId, Status>,
    pub end_time: u64,
}

impl SimReport {
    pub fn from_log(records: &[LogRecord]) -> Result<SimReport, String> {
        let Some(LogRecord::Header {
            scenario,
            seed,
            profile,
            p_bits,
            q_bits,
            block_bits,
            constants,
            ..
        }) = records.first()
        else {
            return Err("log does not start with a header record".into());
        };
        let mut r = SimReport {
            scenario: scenario.clone(),
            seed: *seed,
            profile: profile.clone(),
            p_bits: *p_bits,
            q_bits: *q_bits,
            block_bits: *block_bits,
            constants: constants.clone(),
            phases: BTreeMap::new(),
            ledgers: BTreeMap::new(),
            issued: BTreeMap::new(),
            rejects: BTreeMap::new(),
            sessions: BTreeMap::new(),
            attacks: Vec::new(),
            failures: Vec::new(),
            warnings: Vec::new(),
            frames_sent: 0,
            frames_dropped: 0,
            bytes_on_air: 0,
            trust_list: Vec::new(),
            statuses: BTreeMap::new(),
            end_time: 0,
        };
        let mut finished = false;
        for rec in &records[1..] {
            match rec {
                LogRecord::Header { .. } => return Err("second header record".into()),
                LogRecord::Phase { node, phase, .. } => {
                    r.phases.insert(*node, *phase);
                    let ledger = r.ledgers.entry(*node).or_default();
                    if *phase == Phase::Trusted {
                        ledger.mark_trusted();
                    }
                }
                LogRecord::Energy {
                    t,
                    node,
                    category,
                    process,
                    units,
                    pj,
                } => r.ledgers.entry(*node).or_default().record(EnergyEvent {
                    t: *t,
                    category: *category,
                    process: *process,
                    units: *units,
                    energy: Energy(*pj),
                }),
                LogRecord::Frame { dir, len, .. } => match dir {
                    super::Direction::Tx | super::Direction::Inject => {
                        r.frames_sent += 1;
                        r.bytes_on_air += len;
                    }
                    super::Direction::Drop => r.frames_dropped += 1,
                    super::Direction::Rx => {}
                },
                LogRecord::Reject {
                    at, kind, reason, ..
                } => *r.rejects.entry((*at, *kind, *reason)).or_default() += 1,
                LogRecord::TrustList { node, ids, .. } => {
                    r.issued.insert(*node, ids.clone());
                }
                LogRecord::Session {
                    initiator,
                    responder,
                    confirmed,
                    ..
                } => {
                    let c = r.sessions.entry((*initiator, *responder)).or_default();
                    *c = *confirmed;
                }
                LogRecord::ActionFailed {
                    t, node, action, error,
                } => r.failures.push(format!("t={t} node {node} {action}: {error}")),
                LogRecord::Warning { t, message } => r.warnings.push(format!("t={t} {message}")),
                LogRecord::Attack {
                    index,
                    at,
                    kind,
                    verdict,
                    reasons,
                    note,
                } => r.attacks.push(AttackRow {
                    index: *index,
                    at: *at,
                    kind: *kind,
                    verdict: *verdict,
                    reasons: reasons.clone(),
                    note: note.clone(),
                }),
                LogRecord::Final {
                    t,
                    trust_list,
                    statuses,
                } => {
                    r.end_time = *t;
                    r.trust_list = trust_list.clone();
                    r.statuses = statuses.iter().copied().collect();
                    finished = true;
                }
                LogRecord::Boot { .. } | LogRecord::Tamper { .. } => {}
            }
        }
        if !finished {
            return Err("log has no final record".into());
        }
        Ok(r)
    }

    pub fn trustid_sizing(&self) -> Option<TrustIdSizing> {
        let ids = self.issued.values().map(Vec::len).max()?;
        let payload_bytes = 2 * ids;
        Some(TrustIdSizing {
            ids,
            payload_bytes,
            fragmented_bytes: on_air_len(payload_bytes),
            frames: payload_bytes.div_ceil(MAX_PAYLOAD).max(1),
        })
    }

    pub fn tables(&self) -> Vec<Table> {
        let mut tables = Vec::new();

        let mut run = Table::new("run", "Run", &["field", "value"]);
        run.row(["scenario".to_string(), self.scenario.clone()]);
        run.row(["seed".to_string(), self.seed.to_string()]);
        run.row(["profile".to_string(), self.profile.clone()]);
        run.row(["|p| bits".to_string(), self.p_bits.to_string()]);
        run.row(["|q| bits".to_string(), self.q_bits.to_string()]);
        run.row(["block bits".to_string(), self.block_bits.to_string()]);
        run.row(["nodes".to_string(), self.phases.len().to_string()]);
        run.row(["end time".to_string(), self.end_time.to_string()]);
        run.row(["frames sent".to_string(), self.frames_sent.to_string()]);
        run.row(["frames dropped".to_string(), self.frames_dropped.to_string()]);
        run.row(["bytes on air".to_string(), self.bytes_on_air.to_string()]);
        for f in &self.failures {
            run.note(format!("action failed: {f}"));
        }
        for w in &self.warnings {
            run.note(format!("warning: {w}"));
        }
        tables.push(run);

        let mut nodes = Table::new(
            "nodes",
            "Nodes",
            &["node", "phase", "bs status", "issued trust list", "one-time TA (mJ)", "total billed (mJ)"],
        );
        for (id, phase) in &self.phases {
            let ledger = &self.ledgers[id];
            nodes.row([
                id.to_string(),
                phase.to_string(),
                self.statuses.get(id).map(status_str).unwrap_or("-").to_string(),
                self.issued.get(id).map(|l| id_list(l)).unwrap_or_else(|| "-".into()),
                mj(ledger.one_time_ta_total().joules()),
                mj(ledger.total().joules()),
            ]);
        }
        nodes.note(format!("base station trust list: {}", id_list(&self.trust_list)));
        tables.push(nodes);

        let mut rejects = Table::new("rejects", "Rejected messages", &["receiver", "message", "reason", "count"]);
        for ((at, kind, reason), n) in &self.rejects {
            rejects.row([at.to_string(), kind_str(*kind).to_string(), reason.to_string(), n.to_string()]);
        }
        tables.push(rejects);

        let mut sessions = Table::new("sessions", "Sessions", &["initiator", "responder", "key confirmed"]);
        for ((a, b), confirmed) in &self.sessions {
            sessions.row([a.to_string(), b.to_string(), confirmed.to_string()]);
        }
        sessions.note("key confirmation is a test probe outside the protocol and is not billed");
        tables.push(sessions);

        if !self.attacks.is_empty() {
            let mut attacks = Table::new("attacks", "Attacks", &["#", "kind", "at", "verdict", "reasons", "note"]);
            for a in &self.attacks {
                let reasons: Vec<String> = a.reasons.iter().map(ToString::to_string).collect();
                attacks.row([
                    a.index.to_string(),
                    a.kind.to_string(),
                    a.at.to_string(),
                    a.verdict.to_string(),
                    reasons.join(" "),
                    a.note.clone(),
                ]);
            }
            tables.push(attacks);
        }

        tables.extend(energy_tables(&EnergyInputs {
            constants: &self.constants,
            ledgers: &self.ledgers,
            trustid: self.trustid_sizing(),
        }));
        tables
    }

    pub fn render_text(&self) -> String {
        render_text(&self.tables())
    }

    pub fn render_csv(&self) -> String {
        render_csv(&self.tables())
    }
}

fn status_str(s: &Status) -> &'static str {
    match s {
        Status::Registered => "registered",
        Status::Trusted => "trusted",
        Status::Terminated => "terminated",
    }
}

fn kind_str(k: FrameKind) -> &'static str {
    match k {
        FrameKind::TaRequest => "ta_request",
        FrameKind::TaAck => "ta_ack",
        FrameKind::Ake => "ake",
        FrameKind::Probe => "probe",
    }
}

/// Compact form of a sorted id list: "1-3 7 9-12".
fn id_list(ids: &[NodeId]) -> String {
    if ids.is_empty() {
        return "(empty)".into();
    }
    let mut parts = Vec::new();
    let mut start = ids[0].0;
    let mut prev = start;
    for id in ids[1..].iter().map(|i| i.0).chain(std::iter::once(u16::MAX)) {
        if id != prev.wrapping_add(1) || id == u16::MAX {
            parts.push(if start == prev { start.to_string() } else { format!("{start}-{prev}") });
            start = id;
        }
        prev = id;
    }
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_ranges() {
        let ids = |v: &[u16]| v.iter().copied().map(NodeId).collect::<Vec<_>>();
        assert_eq!(id_list(&ids(&[])), "(empty)");
        assert_eq!(id_list(&ids(&[4])), "4");
        assert_eq!(id_list(&ids(&[1, 2, 3, 7, 9, 10])), "1-3 7 9-10");
    }
}
