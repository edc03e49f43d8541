//! Discrete-event loop: one virtual clock, constant per-frame latency, a
//! seeded lossy channel and an adversary that sees every frame.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use super::log::{Direction, LogRecord, Verdict};
use super::scenario::{Action, AttackKind, AttackSpec, Scenario, Selector};
use crate::ake;
use crate::digest::sha256;
use crate::ibe::{setup, IbeError, MasterKey, PrivateKey, PublicParams, SecurityConfig};
use crate::ids::NodeId;
use crate::protocol::{
    encode_payload, fragment, probe_tag, seal, BaseStation, Envelope, Frame, FrameKind, Message, Phase, ProtocolError,
    Reassembler, RejectReason, SensorNode, TaRecord,
};
use crate::secure_boot::{BootChain, TrustValue};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Ibe(#[from] IbeError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{0}")]
    Config(String),
}

/// Knobs that are not part of the scenario file.
#[derive(Clone, Debug)]
pub struct SimOptions {
    /// Overrides the scenario's seed.
    pub seed: Option<u64>,
    /// Parameters and master key from key files instead of a fresh setup.
    pub keys: Option<(PublicParams, MasterKey)>,
    /// Base-station replay check. Only tests turn it off.
    pub nonce_check: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            seed: None,
            keys: None,
            nonce_check: true,
        }
    }
}

/// Independent 64-bit seed for one named random stream.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let d = sha256(&[&seed.to_be_bytes(), label.as_bytes()]);
    u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
}

enum Item {
    Action(Action, Option<usize>),
    Deliver(Frame, Option<usize>),
    Expire(NodeId),
}

struct Captured {
    kind: FrameKind,
    src: NodeId,
    frames: Vec<Frame>,
}

struct Armed {
    attack: usize,
    selector: Selector,
    bit: Option<usize>,
    seen: u32,
}

struct AttackState {
    kind: AttackKind,
    at: u64,
    verdict: Option<Verdict>,
    reasons: Vec<RejectReason>,
    key_derived: bool,
    note: String,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    params: PublicParams,
    bs: BaseStation,
    nodes: BTreeMap<NodeId, SensorNode>,
    queue: BinaryHeap<Reverse<(u64, u64)>>,
    items: BTreeMap<u64, Item>,
    next_seq: u64,
    reasm: BTreeMap<NodeId, Reassembler>,
    tags: BTreeMap<(NodeId, NodeId, u16), usize>,
    captured: Vec<Captured>,
    armed: Vec<Armed>,
    attacks: Vec<AttackState>,
    channel_rng: ChaCha20Rng,
    adversary_rng: ChaCha20Rng,
    adversary_msg: u16,
    flushed: BTreeMap<NodeId, usize>,
    phases: BTreeMap<NodeId, Phase>,
    now: u64,
    records: Vec<LogRecord>,
    observer: Option<&'a mut dyn FnMut(&LogRecord)>,
}

/// Runs a scenario to completion and returns the event log.
pub fn run<'a>(
    scenario: &'a Scenario,
    opts: &SimOptions,
    observer: Option<&'a mut dyn FnMut(&LogRecord)>,
) -> Result<Vec<LogRecord>, SimError> {
    let seed = opts.seed.unwrap_or(scenario.seed);
    let (params, master) = match &opts.keys {
        Some((params, master)) => {
            if params.profile() != scenario.profile {
                return Err(SimError::Config(format!(
                    "key files are for profile {}, scenario uses {}",
                    params.profile(),
                    scenario.profile
                )));
            }
            (params.clone(), master.clone())
        }
        None => {
            let mut config = SecurityConfig::for_profile(scenario.profile, scenario.master_seed);
            config.block_bits = scenario.block_bits;
            setup(&config)?
        }
    };
    let mut bs = BaseStation::new(params.clone(), master, derive_seed(seed, "base-station"))?;
    if !opts.nonce_check {
        bs.disable_nonce_check_for_testing();
    }
    let mut engine = Engine {
        scenario,
        params,
        bs,
        nodes: BTreeMap::new(),
        queue: BinaryHeap::new(),
        items: BTreeMap::new(),
        next_seq: 0,
        reasm: BTreeMap::new(),
        tags: BTreeMap::new(),
        captured: Vec::new(),
        armed: Vec::new(),
        attacks: Vec::new(),
        channel_rng: ChaCha20Rng::seed_from_u64(derive_seed(seed, "channel")),
        adversary_rng: ChaCha20Rng::seed_from_u64(derive_seed(seed, "adversary")),
        adversary_msg: 0x8000,
        flushed: BTreeMap::new(),
        phases: BTreeMap::new(),
        now: 0,
        records: Vec::new(),
        observer,
    };
    engine.log(LogRecord::Header {
        scenario: scenario.name.clone(),
        seed,
        profile: scenario.profile.to_string(),
        p_bits: engine.params.p().bits(),
        q_bits: engine.params.q().bits(),
        block_bits: engine.params.block_bits(),
        nodes: scenario.nodes.len(),
        constants: scenario.energy.clone(),
    });
    engine.provision(seed)?;
    for event in &scenario.events {
        let tag = match &event.action {
            Action::Attack(spec) => {
                engine.attacks.push(AttackState {
                    kind: spec.kind(),
                    at: event.at,
                    verdict: None,
                    reasons: Vec::new(),
                    key_derived: false,
                    note: String::new(),
                });
                Some(engine.attacks.len() - 1)
            }
            _ => None,
        };
        engine.schedule(event.at, Item::Action(event.action.clone(), tag));
    }
    engine.drain();
    engine.finish();
    Ok(engine.records)
}

impl Engine<'_> {
    fn log(&mut self, r: LogRecord) {
        if let Some(obs) = self.observer.as_mut() {
            obs(&r);
        }
        self.records.push(r);
    }

    fn schedule(&mut self, t: u64, item: Item) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.items.insert(seq, item);
        self.queue.push(Reverse((t, seq)));
    }

    fn provision(&mut self, seed: u64) -> Result<(), SimError> {
        for spec in &self.scenario.nodes {
            let secrets = self.bs.dp_provision(spec.id)?;
            let chain = BootChain::provision(spec.images.clone(), self.scenario.trust_offset)
                .map_err(|e| SimError::Config(format!("node {}: {e}", spec.id)))?;
            let node = SensorNode::new(
                spec.id,
                secrets,
                chain,
                self.scenario.energy.clone(),
                derive_seed(seed, &spec.id.identity()),
            );
            self.nodes.insert(spec.id, node);
            self.sync(spec.id);
            let node = self.nodes.get_mut(&spec.id).expect("inserted");
            self.bs.pdp_register(node)?;
            self.sync(spec.id);
            if let Some((level, byte)) = spec.tamper {
                self.tamper(spec.id, level, byte);
            }
        }
        Ok(())
    }

    /// Logs new energy events and any phase change of `id`.
    fn sync(&mut self, id: NodeId) {
        let Some(node) = self.nodes.get(&id) else { return };
        let from = self.flushed.get(&id).copied().unwrap_or(0);
        let events: Vec<LogRecord> = node.ledger().events()[from..]
            .iter()
            .map(|e| LogRecord::Energy {
                t: e.t,
                node: id,
                category: e.category,
                process: e.process,
                units: e.units,
                pj: e.energy.picojoules(),
            })
            .collect();
        self.flushed.insert(id, node.ledger().events().len());
        let phase = node.phase();
        for r in events {
            self.log(r);
        }
        if self.phases.get(&id) != Some(&phase) {
            self.phases.insert(id, phase);
            self.log(LogRecord::Phase {
                t: self.now,
                node: id,
                phase,
            });
        }
    }

    fn tamper(&mut self, id: NodeId, level: usize, byte: usize) {
        let node = self.nodes.get_mut(&id).expect("validated");
        match node.chain_mut().tamper(level, byte) {
            Ok(()) => self.log(LogRecord::Tamper { t: self.now, node: id, level }),
            Err(e) => self.log(LogRecord::Warning {
                t: self.now,
                message: format!("tamper on node {id}: {e}"),
            }),
        }
    }

    fn drain(&mut self) {
        while let Some(Reverse((t, seq))) = self.queue.pop() {
            self.now = t;
            match self.items.remove(&seq).expect("scheduled") {
                Item::Action(action, tag) => self.act(t, action, tag),
                Item::Deliver(frame, tag) => self.deliver(t, frame, tag),
                Item::Expire(node) => self.expire(t, node),
            }
        }
    }

    fn failed(&mut self, t: u64, node: NodeId, action: &str, e: impl ToString) {
        self.log(LogRecord::ActionFailed {
            t,
            node,
            action: action.to_string(),
            error: e.to_string(),
        });
    }

    fn act(&mut self, t: u64, action: Action, tag: Option<usize>) {
        match action {
            Action::Boot(id) => {
                let report = self.nodes.get_mut(&id).expect("validated").boot(t);
                for m in report.measurements {
                    self.log(LogRecord::Boot {
                        t,
                        node: id,
                        level: m.level,
                        digest: m.digest,
                        bit: m.bit,
                    });
                }
                self.sync(id);
            }
            Action::Ta(id) => {
                let result = self.nodes.get_mut(&id).expect("validated").ta_request(t);
                self.sync(id);
                match result {
                    Ok(frames) => self.send(t, frames, None),
                    Err(e) => self.failed(t, id, "ta", e),
                }
            }
            Action::Ake { from, to } => {
                let node = self.nodes.get_mut(&from).expect("validated");
                let result = node.initiate_ake(t, to).and_then(|f| Ok((f, node.probe(to)?)));
                self.sync(from);
                match result {
                    Ok((frames, probe)) => {
                        self.send(t, frames, None);
                        if let Some(p) = probe {
                            self.send(t, p, None);
                        }
                    }
                    Err(e) => self.failed(t, from, "ake", e),
                }
            }
            Action::Terminate(id) => {
                if !self.bs.terminate(id) {
                    self.log(LogRecord::Warning {
                        t,
                        message: format!("terminate: node {id} has no trust record"),
                    });
                }
                self.nodes.get_mut(&id).expect("validated").terminate();
                self.sync(id);
            }
            Action::Tamper { node, level, byte } => self.tamper(node, level, byte),
            Action::Attack(spec) => self.attack(t, spec, tag.expect("attacks are tagged")),
        }
    }

    fn attack(&mut self, t: u64, spec: AttackSpec, idx: usize) {
        match spec {
            AttackSpec::Replay(sel) => {
                let found = self
                    .captured
                    .iter()
                    .filter(|c| c.kind == sel.kind && sel.src.is_none_or(|s| s == c.src))
                    .nth(sel.occurrence as usize - 1)
                    .map(|c| c.frames.clone());
                match found {
                    Some(frames) => self.send(t, frames, Some(idx)),
                    None => self.attacks[idx].note = "no captured message matched".into(),
                }
            }
            AttackSpec::Modify { selector, bit } => self.armed.push(Armed {
                attack: idx,
                selector,
                bit,
                seen: 0,
            }),
            AttackSpec::FakeNode { claim } => {
                let hm: String = (0..8)
                    .map(|_| char::from_digit(self.adversary_rng.gen_range(0..16), 16).expect("hex digit"))
                    .collect();
                let hm = TrustValue::try_from(hm).expect("8 hex digits");
                let record = TaRecord::new(claim, hm, self.adversary_rng.gen()).encode();
                let sealed = seal(
                    &self.params,
                    &NodeId::BASE_STATION.identity(),
                    &record,
                    &mut self.adversary_rng,
                );
                match sealed {
                    Ok(bytes) => {
                        let frames = self.forge(FrameKind::TaRequest, claim, NodeId::BASE_STATION, &bytes);
                        self.attacks[idx].note = format!("claimed id {claim} with a random trust value");
                        self.send(t, frames, Some(idx));
                    }
                    Err(e) => self.attacks[idx].note = format!("could not build request: {e}"),
                }
            }
            AttackSpec::Impersonate { claim, target } => {
                // Best effort without S_A: a random multiple of P stands in for it.
                let k = self.params.random_scalar(&mut self.adversary_rng);
                let fake = PrivateKey::from_parts(claim.identity(), self.params.curve().mul(&k, self.params.generator()));
                let nonce: u16 = self.adversary_rng.gen();
                let r: BigUint = self.params.random_scalar(&mut self.adversary_rng);
                match ake::initiate_with_scalar(&self.params, &fake, claim, target, nonce, &r) {
                    Ok((msg, guess)) => {
                        let r_bytes = self.params.curve().encode_point(&msg.r_point);
                        let payload = encode_payload(claim, nonce, &r_bytes).expect("point fits a payload");
                        let ake_frames = self.forge(FrameKind::Ake, claim, target, &payload);
                        let tag = probe_tag(guess.bytes(), claim, nonce);
                        let probe = encode_payload(claim, nonce, &tag).expect("tag fits a payload");
                        let probe_frames = self.forge(FrameKind::Probe, claim, target, &probe);
                        self.attacks[idx].note = format!("claimed id {claim} towards node {target}");
                        self.send(t, ake_frames, Some(idx));
                        self.send(t, probe_frames, Some(idx));
                    }
                    Err(e) => self.attacks[idx].note = format!("could not build message: {e}"),
                }
            }
        }
    }

    fn forge(&mut self, kind: FrameKind, src: NodeId, dst: NodeId, bytes: &[u8]) -> Vec<Frame> {
        let env = Envelope {
            kind,
            src,
            dst,
            msg_id: self.adversary_msg,
        };
        self.adversary_msg = self.adversary_msg.wrapping_add(1);
        fragment(env, 0, bytes).expect("adversary messages fit")
    }

    /// Puts a message on the air. Honest messages pass the adversary's taps
    /// first, which may capture or alter them.
    fn send(&mut self, t: u64, mut frames: Vec<Frame>, mut tag: Option<usize>) {
        let injected = tag.is_some();
        if !injected {
            self.maybe_modify(&mut frames, &mut tag);
            if tag.is_none() {
                let h = &frames[0].header;
                self.captured.push(Captured {
                    kind: h.kind,
                    src: h.src,
                    frames: frames.clone(),
                });
            }
        }
        let latency = self.scenario.channel.latency;
        let loss = self.scenario.channel.loss;
        for (i, frame) in frames.into_iter().enumerate() {
            let bytes = frame.encode().expect("frames are built within limits");
            self.log(frame_record(
                t,
                if injected { Direction::Inject } else { Direction::Tx },
                &frame,
                Some(hex::encode(&bytes)),
                tag,
            ));
            if loss > 0.0 && self.channel_rng.gen::<f64>() < loss {
                self.log(frame_record(t, Direction::Drop, &frame, None, tag));
                continue;
            }
            self.schedule(t + latency * (i as u64 + 1), Item::Deliver(frame, tag));
        }
    }

    fn maybe_modify(&mut self, frames: &mut [Frame], tag: &mut Option<usize>) {
        let h = frames[0].header.clone();
        let pos = self.armed.iter_mut().position(|a| {
            if a.selector.kind == h.kind && a.selector.src.is_none_or(|s| s == h.src) {
                a.seen += 1;
                a.seen == a.selector.occurrence
            } else {
                false
            }
        });
        let Some(pos) = pos else { return };
        let armed = self.armed.remove(pos);
        let total_bits: usize = frames.iter().map(|f| f.payload.len() * 8).sum();
        if total_bits == 0 {
            self.attacks[armed.attack].note = "matched message has no payload".into();
            return;
        }
        let bit = armed
            .bit
            .map(|b| b % total_bits)
            .unwrap_or_else(|| self.adversary_rng.gen_range(0..total_bits));
        let mut rem = bit;
        for f in frames.iter_mut() {
            let bits = f.payload.len() * 8;
            if rem < bits {
                f.payload[rem / 8] ^= 0x80 >> (rem % 8);
                break;
            }
            rem -= bits;
        }
        self.attacks[armed.attack].note = format!("flipped payload bit {bit} of {total_bits}");
        *tag = Some(armed.attack);
    }

    fn deliver(&mut self, t: u64, frame: Frame, tag: Option<usize>) {
        let h = frame.header.clone();
        self.log(frame_record(t, Direction::Rx, &frame, None, tag));
        if !h.dst.is_base_station() {
            match self.nodes.get_mut(&h.dst) {
                Some(node) => node.receive_frame(t, &frame),
                None => {
                    self.log(LogRecord::Warning {
                        t,
                        message: format!("frame for unknown node {}", h.dst),
                    });
                    return;
                }
            }
            self.sync(h.dst);
        }
        if let Some(tag) = tag {
            self.tags.insert((h.dst, h.src, h.msg_id), tag);
        }
        let reasm = self.reasm.entry(h.dst).or_default();
        let before = reasm.pending();
        let pushed = reasm.push(t, frame);
        let started = reasm.pending() > before;
        if started {
            self.schedule(t + self.scenario.channel.reassembly_timeout + 1, Item::Expire(h.dst));
        }
        match pushed {
            Ok(Some(msg)) => {
                let tag = self.tags.remove(&(h.dst, h.src, h.msg_id));
                self.handle(t, msg, tag);
            }
            Ok(None) => {}
            Err(_) => {
                let tag = self.tags.remove(&(h.dst, h.src, h.msg_id));
                self.reject(t, h.dst, h.src, h.kind, RejectReason::Malformed, tag);
            }
        }
    }

    fn expire(&mut self, t: u64, node: NodeId) {
        let timeout = self.scenario.channel.reassembly_timeout;
        let Some(reasm) = self.reasm.get_mut(&node) else { return };
        for (src, msg_id, kind) in reasm.expire(t, timeout) {
            let tag = self.tags.remove(&(node, src, msg_id));
            self.reject(t, node, src, kind, RejectReason::ReassemblyTimeout, tag);
        }
    }

    fn reject(&mut self, t: u64, at: NodeId, src: NodeId, kind: FrameKind, reason: RejectReason, tag: Option<usize>) {
        self.log(LogRecord::Reject {
            t,
            at,
            src,
            kind,
            reason,
            attack: tag,
        });
        self.outcome(tag, kind, Err(reason));
    }

    fn outcome(&mut self, tag: Option<usize>, kind: FrameKind, result: Result<(), RejectReason>) {
        let Some(idx) = tag else { return };
        let a = &mut self.attacks[idx];
        match result {
            Err(r) => {
                a.reasons.push(r);
                if a.verdict != Some(Verdict::Succeeded) {
                    a.verdict = Some(Verdict::Blocked);
                }
            }
            Ok(()) if a.kind == AttackKind::Impersonate && kind == FrameKind::Ake => a.key_derived = true,
            Ok(()) => a.verdict = Some(Verdict::Succeeded),
        }
    }

    fn handle(&mut self, t: u64, msg: Message, tag: Option<usize>) {
        let Message { kind, src, dst, bytes, .. } = msg;
        if dst.is_base_station() {
            if kind != FrameKind::TaRequest {
                return self.reject(t, dst, src, kind, RejectReason::Malformed, tag);
            }
            match self.bs.handle_ta(src, &bytes) {
                Ok(acc) => {
                    self.log(LogRecord::TrustList {
                        t,
                        node: acc.node,
                        ids: acc.trust_list,
                    });
                    self.outcome(tag, kind, Ok(()));
                    self.send(t, acc.ack, None);
                }
                Err(r) => self.reject(t, dst, src, kind, r, tag),
            }
            return;
        }
        let node = self.nodes.get_mut(&dst).expect("checked on delivery");
        let result = match kind {
            FrameKind::TaAck => node.handle_ack(t, &bytes).map(|_| None),
            FrameKind::Ake => node.peer_authenticate(t, src, &bytes).map(|_| Some(false)),
            FrameKind::Probe => node.check_probe(src, &bytes).map(|_| Some(true)),
            FrameKind::TaRequest => Err(RejectReason::Malformed),
        };
        self.sync(dst);
        match result {
            Ok(session) => {
                if let Some(confirmed) = session {
                    self.log(LogRecord::Session {
                        t,
                        initiator: src,
                        responder: dst,
                        confirmed,
                    });
                }
                self.outcome(tag, kind, Ok(()));
            }
            Err(r) => self.reject(t, dst, src, kind, r, tag),
        }
    }

    fn finish(&mut self) {
        let attacks = std::mem::take(&mut self.attacks);
        for (index, a) in attacks.into_iter().enumerate() {
            let verdict = match a.verdict {
                Some(v) => v,
                None if a.key_derived => Verdict::Blocked,
                None => Verdict::NoOp,
            };
            let mut note = a.note;
            if a.key_derived && verdict != Verdict::Succeeded {
                note.push_str("; responder derived a key the attacker cannot match");
            }
            self.log(LogRecord::Attack {
                index,
                at: a.at,
                kind: a.kind,
                verdict,
                reasons: a.reasons,
                note,
            });
        }
        let statuses = self.bs.records().map(|r| (r.id, r.status)).collect();
        self.log(LogRecord::Final {
            t: self.now,
            trust_list: self.bs.trust_list(),
            statuses,
        });
    }
}

fn frame_record(t: u64, dir: Direction, f: &Frame, hex: Option<String>, attack: Option<usize>) -> LogRecord {
    let h = &f.header;
    LogRecord::Frame {
        t,
        dir,
        kind: h.kind,
        src: h.src,
        dst: h.dst,
        seq: h.seq,
        msg_id: h.msg_id,
        frag: format!("{}/{}", h.frag_index + 1, h.frag_count),
        len: f.len(),
        hex,
        attack,
    }
}
