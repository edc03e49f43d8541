//! Scenario files (TOML, strict).
//!
//! ```toml
//! name = "demo"
//! profile = "demo"          # toy | demo
//! seed = 42                 # run seed, overridable on the command line
//! energy = "energy.toml"    # optional constants file, relative to the scenario
//!
//! [base_station]
//! master_seed = 7
//! trust_offset = 24
//!
//! [channel]
//! loss = 0.0
//! latency = 1
//! reassembly_timeout = 50
//!
//! [[nodes]]
//! id = 1                    # or: range = [1, 200]
//! chain_depth = 3           # or: images = ["bl1.bin", "bl2.bin", "bl3.bin"]
//! tamper = { level = 2, byte = 0 }   # field tamper applied after registration
//!
//! [[events]]
//! at = 0
//! action = "boot"           # boot | ta | ake | terminate | tamper | attack
//! node = 1                  # or node = "all"
//!
//! [[events]]
//! at = 20
//! action = "ake"
//! from = 1
//! to = 2
//!
//! [[events]]
//! at = 40
//! action = "attack"
//! attack = { kind = "replay", message = "ta_request", src = 1, occurrence = 1 }
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::energy::EnergyConstants;
use crate::ibe::{Profile, DEFAULT_BLOCK_BITS};
use crate::ids::NodeId;
use crate::protocol::FrameKind;
use crate::secure_boot::{default_images, DEFAULT_CHAIN_DEPTH, DEFAULT_TRUST_OFFSET, DIGEST_HEX_LEN, TRUST_VALUE_LEN};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("scenario does not parse: {0}")]
    Parse(String),
    #[error("invalid scenario:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    profile: String,
    #[serde(default)]
    seed: u64,
    block_bits: Option<u32>,
    energy: Option<PathBuf>,
    #[serde(default)]
    base_station: RawBaseStation,
    #[serde(default)]
    channel: RawChannel,
    #[serde(default)]
    nodes: Vec<RawNode>,
    #[serde(default)]
    events: Vec<RawEvent>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawBaseStation {
    master_seed: u64,
    trust_offset: usize,
}

impl Default for RawBaseStation {
    fn default() -> Self {
        RawBaseStation {
            master_seed: 1,
            trust_offset: DEFAULT_TRUST_OFFSET,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawChannel {
    loss: f64,
    latency: u64,
    reassembly_timeout: u64,
}

impl Default for RawChannel {
    fn default() -> Self {
        RawChannel {
            loss: 0.0,
            latency: 1,
            reassembly_timeout: 50,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: Option<u16>,
    range: Option<[u16; 2]>,
    chain_depth: Option<usize>,
    images: Option<Vec<PathBuf>>,
    tamper: Option<RawTamper>,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct RawTamper {
    level: usize,
    #[serde(default)]
    byte: usize,
}

#[derive(Deserialize, Clone)]
#[serde(untagged)]
enum NodeRef {
    One(u16),
    Named(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    at: u64,
    action: String,
    node: Option<NodeRef>,
    from: Option<u16>,
    to: Option<u16>,
    level: Option<usize>,
    byte: Option<usize>,
    attack: Option<RawAttack>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttack {
    kind: String,
    message: Option<String>,
    src: Option<u16>,
    occurrence: Option<u32>,
    bit: Option<usize>,
    claim: Option<u16>,
    target: Option<u16>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub profile: Profile,
    pub seed: u64,
    pub block_bits: u32,
    pub energy: EnergyConstants,
    pub master_seed: u64,
    pub trust_offset: usize,
    pub channel: ChannelConfig,
    pub nodes: Vec<NodeSpec>,
    pub events: Vec<Event>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelConfig {
    pub loss: f64,
    pub latency: u64,
    pub reassembly_timeout: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: NodeId,
    pub images: Vec<Vec<u8>>,
    pub tamper: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub at: u64,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Boot(NodeId),
    Ta(NodeId),
    Ake { from: NodeId, to: NodeId },
    Terminate(NodeId),
    Tamper { node: NodeId, level: usize, byte: usize },
    Attack(AttackSpec),
}

/// Picks the n-th message of a kind (optionally from one sender) seen on
/// the channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selector {
    pub kind: FrameKind,
    pub src: Option<NodeId>,
    pub occurrence: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttackSpec {
    /// Re-delivers a captured message verbatim.
    Replay(Selector),
    /// Flips one payload bit of the next matching message in flight.
    Modify { selector: Selector, bit: Option<usize> },
    /// Sends an authentication request under a self-chosen id.
    FakeNode { claim: NodeId },
    /// Sends a key-exchange message claiming another node's id.
    Impersonate { claim: NodeId, target: NodeId },
}

impl AttackSpec {
    pub fn kind(&self) -> AttackKind {
        match self {
            AttackSpec::Replay(_) => AttackKind::Replay,
            AttackSpec::Modify { .. } => AttackKind::Modify,
            AttackSpec::FakeNode { .. } => AttackKind::FakeNode,
            AttackSpec::Impersonate { .. } => AttackKind::Impersonate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Replay,
    Modify,
    FakeNode,
    Impersonate,
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackKind::Replay => "replay",
            AttackKind::Modify => "modify",
            AttackKind::FakeNode => "fake_node",
            AttackKind::Impersonate => "impersonate",
        })
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, path.parent())
}

/// Parses and validates a scenario. Relative file references resolve
/// against `base_dir`.
pub fn parse_scenario(text: &str, base_dir: Option<&Path>) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    Validator::new(base_dir).run(raw)
}

fn frame_kind(s: &str) -> Option<FrameKind> {
    Some(match s {
        "ta_request" => FrameKind::TaRequest,
        "ta_ack" => FrameKind::TaAck,
        "ake" => FrameKind::Ake,
        _ => return None,
    })
}

struct Validator<'a> {
    base_dir: Option<&'a Path>,
    errors: Vec<String>,
}

impl<'a> Validator<'a> {
    fn new(base_dir: Option<&'a Path>) -> Self {
        Validator {
            base_dir,
            errors: Vec::new(),
        }
    }

    fn err(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    fn run(mut self, raw: RawScenario) -> Result<Scenario, ScenarioError> {
        let profile = match raw.profile.as_str() {
            "toy" => Profile::Toy,
            "demo" => Profile::Demo,
            other => {
                self.err(format!("profile: unknown profile `{other}` (expected toy or demo)"));
                Profile::Toy
            }
        };
        let block_bits = raw.block_bits.unwrap_or(DEFAULT_BLOCK_BITS);
        if block_bits == 0 || !block_bits.is_multiple_of(8) || block_bits > 256 {
            self.err(format!("block_bits: {block_bits} must be a positive multiple of 8 up to 256"));
        }
        let energy = match &raw.energy {
            None => EnergyConstants::default(),
            Some(p) => match EnergyConstants::load(&self.resolve(p)) {
                Ok(c) => c,
                Err(e) => {
                    self.err(format!("energy: {e}"));
                    EnergyConstants::default()
                }
            },
        };
        let bs = &raw.base_station;
        if bs.trust_offset + TRUST_VALUE_LEN > DIGEST_HEX_LEN {
            self.err(format!(
                "base_station.trust_offset: {} leaves fewer than 8 hex characters",
                bs.trust_offset
            ));
        }
        let ch = &raw.channel;
        if !(0.0..=1.0).contains(&ch.loss) {
            self.err(format!("channel.loss: {} is not a probability", ch.loss));
        }
        if ch.latency == 0 {
            self.err("channel.latency: must be at least 1");
        }

        let nodes = self.nodes(&raw.nodes);
        let declared: BTreeSet<NodeId> = nodes.iter().map(|n| n.id).collect();
        let events = self.events(&raw.events, &nodes, &declared);

        if !self.errors.is_empty() {
            return Err(ScenarioError::Invalid(self.errors));
        }
        Ok(Scenario {
            name: raw.name,
            profile,
            seed: raw.seed,
            block_bits,
            energy,
            master_seed: bs.master_seed,
            trust_offset: bs.trust_offset,
            channel: ChannelConfig {
                loss: ch.loss,
                latency: ch.latency,
                reassembly_timeout: ch.reassembly_timeout,
            },
            nodes,
            events,
        })
    }

    fn nodes(&mut self, raw: &[RawNode]) -> Vec<NodeSpec> {
        let mut out: Vec<NodeSpec> = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, n) in raw.iter().enumerate() {
            let ctx = format!("nodes[{i}]");
            let ids: Vec<u16> = match (n.id, n.range) {
                (Some(id), None) => vec![id],
                (None, Some([a, b])) if a <= b => (a..=b).collect(),
                (None, Some([a, b])) => {
                    self.err(format!("{ctx}.range: [{a}, {b}] is empty"));
                    continue;
                }
                _ => {
                    self.err(format!("{ctx}: exactly one of `id` or `range` is required"));
                    continue;
                }
            };
            let images: Vec<Option<Vec<u8>>> = match (&n.images, n.chain_depth) {
                (Some(_), Some(_)) => {
                    self.err(format!("{ctx}: `images` and `chain_depth` are mutually exclusive"));
                    continue;
                }
                (Some(paths), None) => {
                    if paths.len() < 2 {
                        self.err(format!("{ctx}.images: a chain needs at least two images"));
                    }
                    if ids.len() > 1 {
                        self.err(format!("{ctx}.images: image files cannot be shared by a range"));
                    }
                    paths
                        .iter()
                        .map(|p| match std::fs::read(self.resolve(p)) {
                            Ok(b) => Some(b),
                            Err(e) => {
                                self.err(format!("{ctx}.images: {}: {e}", p.display()));
                                None
                            }
                        })
                        .collect()
                }
                (None, depth) => {
                    let depth = depth.unwrap_or(DEFAULT_CHAIN_DEPTH);
                    if depth < 2 {
                        self.err(format!("{ctx}.chain_depth: {depth} is below 2"));
                    }
                    Vec::new()
                }
            };
            let depth = if n.images.is_some() {
                images.len()
            } else {
                n.chain_depth.unwrap_or(DEFAULT_CHAIN_DEPTH)
            };
            if let Some(t) = n.tamper {
                if t.level < 1 || t.level > depth {
                    self.err(format!("{ctx}.tamper.level: {} outside 1..={depth}", t.level));
                }
            }
            for id in ids {
                if id == 0 {
                    self.err(format!("{ctx}: id 0 is reserved for the base station"));
                    continue;
                }
                if !seen.insert(id) {
                    self.err(format!("{ctx}: node {id} declared twice"));
                    continue;
                }
                let imgs = if n.images.is_some() {
                    images.iter().map(|b| b.clone().unwrap_or_default()).collect()
                } else {
                    default_images(id, depth.max(2))
                };
                out.push(NodeSpec {
                    id: NodeId(id),
                    images: imgs,
                    tamper: n.tamper.map(|t| (t.level, t.byte)),
                });
            }
        }
        out
    }

    fn node_ref(&mut self, ctx: &str, field: &str, v: Option<u16>, declared: &BTreeSet<NodeId>) -> Option<NodeId> {
        match v {
            None => {
                self.err(format!("{ctx}: `{field}` is required"));
                None
            }
            Some(id) if !declared.contains(&NodeId(id)) => {
                self.err(format!("{ctx}.{field}: node {id} is not declared"));
                None
            }
            Some(id) => Some(NodeId(id)),
        }
    }

    fn forbid(&mut self, ctx: &str, action: &str, present: &[(&str, bool)]) {
        for (name, is_set) in present {
            if *is_set {
                self.err(format!("{ctx}: `{name}` is not valid for action `{action}`"));
            }
        }
    }

    fn events(&mut self, raw: &[RawEvent], nodes: &[NodeSpec], declared: &BTreeSet<NodeId>) -> Vec<Event> {
        let mut out = Vec::new();
        let mut last_at = 0;
        for (i, e) in raw.iter().enumerate() {
            let ctx = format!("events[{i}]");
            if e.at < last_at {
                self.err(format!("{ctx}.at: {} is earlier than the previous event ({last_at})", e.at));
            }
            last_at = last_at.max(e.at);
            let has = |b: bool, n: &'static str| (n, b);
            match e.action.as_str() {
                "boot" | "ta" | "terminate" | "tamper" => {
                    let tamper = e.action == "tamper";
                    self.forbid(
                        &ctx,
                        &e.action,
                        &[
                            has(e.from.is_some(), "from"),
                            has(e.to.is_some(), "to"),
                            has(e.attack.is_some(), "attack"),
                            has(!tamper && e.level.is_some(), "level"),
                            has(!tamper && e.byte.is_some(), "byte"),
                        ],
                    );
                    let targets: Vec<NodeId> = match &e.node {
                        None => {
                            self.err(format!("{ctx}: `node` is required"));
                            continue;
                        }
                        Some(NodeRef::Named(s)) if s == "all" && !tamper => nodes.iter().map(|n| n.id).collect(),
                        Some(NodeRef::Named(s)) => {
                            self.err(format!("{ctx}.node: `{s}` is not a node id"));
                            continue;
                        }
                        Some(NodeRef::One(id)) => match self.node_ref(&ctx, "node", Some(*id), declared) {
                            Some(n) => vec![n],
                            None => continue,
                        },
                    };
                    if tamper && e.level.is_none() {
                        self.err(format!("{ctx}: `level` is required"));
                        continue;
                    }
                    for node in targets {
                        let action = match e.action.as_str() {
                            "boot" => Action::Boot(node),
                            "ta" => Action::Ta(node),
                            "terminate" => Action::Terminate(node),
                            _ => Action::Tamper {
                                node,
                                level: e.level.unwrap_or(2),
                                byte: e.byte.unwrap_or(0),
                            },
                        };
                        out.push(Event { at: e.at, action });
                    }
                }
                "ake" => {
                    self.forbid(
                        &ctx,
                        "ake",
                        &[
                            has(e.node.is_some(), "node"),
                            has(e.attack.is_some(), "attack"),
                            has(e.level.is_some(), "level"),
                            has(e.byte.is_some(), "byte"),
                        ],
                    );
                    let from = self.node_ref(&ctx, "from", e.from, declared);
                    let to = self.node_ref(&ctx, "to", e.to, declared);
                    if let (Some(from), Some(to)) = (from, to) {
                        if from == to {
                            self.err(format!("{ctx}: `from` and `to` must differ"));
                        }
                        out.push(Event {
                            at: e.at,
                            action: Action::Ake { from, to },
                        });
                    }
                }
                "attack" => {
                    self.forbid(
                        &ctx,
                        "attack",
                        &[
                            has(e.node.is_some(), "node"),
                            has(e.from.is_some(), "from"),
                            has(e.to.is_some(), "to"),
                            has(e.level.is_some(), "level"),
                            has(e.byte.is_some(), "byte"),
                        ],
                    );
                    let Some(a) = &e.attack else {
                        self.err(format!("{ctx}: `attack` table is required"));
                        continue;
                    };
                    if let Some(spec) = self.attack(&format!("{ctx}.attack"), a, declared) {
                        out.push(Event {
                            at: e.at,
                            action: Action::Attack(spec),
                        });
                    }
                }
                other => self.err(format!(
                    "{ctx}.action: unknown action `{other}` (expected boot, ta, ake, terminate, tamper or attack)"
                )),
            }
        }
        out
    }

    fn attack(&mut self, ctx: &str, a: &RawAttack, declared: &BTreeSet<NodeId>) -> Option<AttackSpec> {
        let has = |b: bool, n: &'static str| (n, b);
        let selector = |v: &mut Self| -> Option<Selector> {
            let kind = match a.message.as_deref() {
                None => {
                    v.err(format!("{ctx}: `message` is required for kind `{}`", a.kind));
                    return None;
                }
                Some(m) => match frame_kind(m) {
                    Some(k) => k,
                    None => {
                        v.err(format!("{ctx}.message: `{m}` (expected ta_request, ta_ack or ake)"));
                        return None;
                    }
                },
            };
            let src = match a.src {
                Some(0) => Some(NodeId::BASE_STATION),
                Some(id) if !declared.contains(&NodeId(id)) => {
                    v.err(format!("{ctx}.src: node {id} is not declared"));
                    return None;
                }
                other => other.map(NodeId),
            };
            let occurrence = a.occurrence.unwrap_or(1);
            if occurrence == 0 {
                v.err(format!("{ctx}.occurrence: counts from 1"));
                return None;
            }
            Some(Selector { kind, src, occurrence })
        };
        match a.kind.as_str() {
            "replay" => {
                self.forbid(
                    ctx,
                    "replay",
                    &[has(a.bit.is_some(), "bit"), has(a.claim.is_some(), "claim"), has(a.target.is_some(), "target")],
                );
                selector(self).map(AttackSpec::Replay)
            }
            "modify" => {
                self.forbid(ctx, "modify", &[has(a.claim.is_some(), "claim"), has(a.target.is_some(), "target")]);
                selector(self).map(|selector| AttackSpec::Modify { selector, bit: a.bit })
            }
            "fake_node" => {
                self.forbid(
                    ctx,
                    "fake_node",
                    &[
                        has(a.message.is_some(), "message"),
                        has(a.src.is_some(), "src"),
                        has(a.occurrence.is_some(), "occurrence"),
                        has(a.bit.is_some(), "bit"),
                        has(a.target.is_some(), "target"),
                    ],
                );
                match a.claim {
                    Some(0) => {
                        self.err(format!("{ctx}.claim: id 0 is the base station"));
                        None
                    }
                    claim => Some(AttackSpec::FakeNode {
                        claim: NodeId(claim.unwrap_or(999)),
                    }),
                }
            }
            "impersonate" => {
                self.forbid(
                    ctx,
                    "impersonate",
                    &[
                        has(a.message.is_some(), "message"),
                        has(a.src.is_some(), "src"),
                        has(a.occurrence.is_some(), "occurrence"),
                        has(a.bit.is_some(), "bit"),
                    ],
                );
                let claim = self.node_ref(ctx, "claim", a.claim, declared);
                let target = self.node_ref(ctx, "target", a.target, declared);
                Some(AttackSpec::Impersonate {
                    claim: claim?,
                    target: target?,
                })
            }
            other => {
                self.err(format!(
                    "{ctx}.kind: unknown attack `{other}` (expected replay, modify, fake_node or impersonate)"
                ));
                None
            }
        }
    }
}
