//! Event log: one JSON object per line.

use serde::{Deserialize, Serialize};

use super::scenario::AttackKind;
use crate::energy::{Category, EnergyConstants, Process};
use crate::ids::NodeId;
use crate::protocol::{FrameKind, Phase, RejectReason, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Tx,
    Rx,
    Drop,
    Inject,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Blocked,
    Succeeded,
    NoOp,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Blocked => "blocked",
            Verdict::Succeeded => "succeeded",
            Verdict::NoOp => "no-op",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Header {
        scenario: String,
        seed: u64,
        profile: String,
        p_bits: u64,
        q_bits: u64,
        block_bits: u32,
        nodes: usize,
        constants: EnergyConstants,
    },
    Phase {
        t: u64,
        node: NodeId,
        phase: Phase,
    },
    Boot {
        t: u64,
        node: NodeId,
        level: usize,
        digest: Option<String>,
        bit: u8,
    },
    Tamper {
        t: u64,
        node: NodeId,
        level: usize,
    },
    Frame {
        t: u64,
        dir: Direction,
        kind: FrameKind,
        src: NodeId,
        dst: NodeId,
        seq: u16,
        msg_id: u16,
        frag: String,
        len: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hex: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        attack: Option<usize>,
    },
    Energy {
        t: u64,
        node: NodeId,
        category: Category,
        process: Process,
        units: u64,
        pj: u64,
    },
    Reject {
        t: u64,
        at: NodeId,
        src: NodeId,
        kind: FrameKind,
        reason: RejectReason,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        attack: Option<usize>,
    },
    TrustList {
        t: u64,
        node: NodeId,
        ids: Vec<NodeId>,
    },
    Session {
        t: u64,
        initiator: NodeId,
        responder: NodeId,
        confirmed: bool,
    },
    ActionFailed {
        t: u64,
        node: NodeId,
        action: String,
        error: String,
    },
    Warning {
        t: u64,
        message: String,
    },
    Attack {
        index: usize,
        at: u64,
        kind: AttackKind,
        verdict: Verdict,
        reasons: Vec<RejectReason>,
        note: String,
    },
    Final {
        t: u64,
        trust_list: Vec<NodeId>,
        statuses: Vec<(NodeId, Status)>,
    },
}

impl LogRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log records serialize")
    }
}

pub fn write_log(records: &[LogRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

pub fn parse_log(text: &str) -> Result<Vec<LogRecord>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}
