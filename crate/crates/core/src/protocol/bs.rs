use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::frame::{fragment, Envelope, Frame, FrameKind};
use super::messages::{open, seal, AckRecord, TaRecord};
use super::node::SensorNode;
use super::{ProtocolError, RejectReason};
use crate::ibe::{extract, IbeError, MasterKey, PrivateKey, PublicParams};
use crate::ids::NodeId;
use crate::secure_boot::TrustValue;

/// What the base station installs into a node before delivery.
#[derive(Clone, Debug)]
pub struct NodeSecrets {
    pub params: PublicParams,
    pub key: PrivateKey,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Registered,
    Trusted,
    Terminated,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrustRecord {
    pub id: NodeId,
    pub trust_value: TrustValue,
    pub status: Status,
    pub last_nonce: Option<u16>,
}

#[derive(Clone, Debug)]
pub struct TaAccepted {
    pub node: NodeId,
    pub nonce: u16,
    pub trust_list: Vec<NodeId>,
    pub ack: Vec<Frame>,
}

/// Key generator and holder of the trust database.
#[derive(Debug)]
pub struct BaseStation {
    params: PublicParams,
    master: MasterKey,
    key: PrivateKey,
    roster: BTreeSet<NodeId>,
    db: BTreeMap<NodeId, TrustRecord>,
    seen_nonces: BTreeMap<NodeId, BTreeSet<u16>>,
    nonce_check: bool,
    rng: ChaCha20Rng,
    seq: u16,
    msg_id: u16,
}

impl BaseStation {
    pub fn new(params: PublicParams, master: MasterKey, rng_seed: u64) -> Result<Self, IbeError> {
        let key = extract(&params, &master, &NodeId::BASE_STATION.identity())?;
        Ok(BaseStation {
            params,
            master,
            key,
            roster: BTreeSet::new(),
            db: BTreeMap::new(),
            seen_nonces: BTreeMap::new(),
            nonce_check: true,
            rng: ChaCha20Rng::seed_from_u64(rng_seed),
            seq: 0,
            msg_id: 0,
        })
    }

    pub fn params(&self) -> &PublicParams {
        &self.params
    }

    pub fn roster(&self) -> &BTreeSet<NodeId> {
        &self.roster
    }

    pub fn record(&self, id: NodeId) -> Option<&TrustRecord> {
        self.db.get(&id)
    }

    pub fn records(&self) -> impl Iterator<Item = &TrustRecord> {
        self.db.values()
    }

    /// Ids whose status is trusted, ascending.
    pub fn trust_list(&self) -> Vec<NodeId> {
        self.db
            .values()
            .filter(|r| r.status == Status::Trusted)
            .map(|r| r.id)
            .collect()
    }

    /// Turns off the replay check. Exists only so tests can show the check
    /// is what stops replays.
    #[doc(hidden)]
    pub fn disable_nonce_check_for_testing(&mut self) {
        self.nonce_check = false;
    }

    /// Offline delivery: extracts the node's private key.
    pub fn dp_provision(&mut self, id: NodeId) -> Result<NodeSecrets, ProtocolError> {
        if id.is_base_station() {
            return Err(ProtocolError::ReservedId(id));
        }
        if self.roster.contains(&id) {
            return Err(ProtocolError::DuplicateId(id));
        }
        let key = extract(&self.params, &self.master, &id.identity())?;
        self.roster.insert(id);
        Ok(NodeSecrets {
            params: self.params.clone(),
            key,
        })
    }

    /// Controlled-environment registration of the node's trust value. A
    /// second registration overwrites the stored value.
    pub fn pdp_register(&mut self, node: &mut SensorNode) -> Result<TrustValue, ProtocolError> {
        if !self.roster.contains(&node.id()) {
            return Err(ProtocolError::UnknownId(node.id()));
        }
        let hm = node.controlled_boot()?;
        self.db.insert(
            node.id(),
            TrustRecord {
                id: node.id(),
                trust_value: hm.clone(),
                status: Status::Registered,
                last_nonce: None,
            },
        );
        node.set_registered();
        Ok(hm)
    }

    /// Verifies an authentication request and, on success, returns the
    /// encrypted ack frames.
    pub fn handle_ta(&mut self, src: NodeId, bytes: &[u8]) -> Result<TaAccepted, RejectReason> {
        let plain = open(&self.params, &self.key, bytes).map_err(|e| match e {
            IbeError::Malformed(_) => RejectReason::Malformed,
            _ => RejectReason::DecryptFailure,
        })?;
        let rec = TaRecord::decode(&plain).map_err(|_| RejectReason::Malformed)?;
        if !rec.mac_is_valid() {
            return Err(RejectReason::MacMismatch);
        }
        if rec.from != rec.id || rec.to != NodeId::BASE_STATION || src != rec.id {
            return Err(RejectReason::Malformed);
        }
        let stored = self.db.get(&rec.id).ok_or(RejectReason::UnknownId)?;
        if stored.trust_value != rec.trust_value {
            return Err(RejectReason::TrustValueMismatch);
        }
        let seen = self.seen_nonces.entry(rec.id).or_default();
        if self.nonce_check && seen.contains(&rec.nonce) {
            return Err(RejectReason::NonceReplay);
        }
        seen.insert(rec.nonce);
        let entry = self.db.get_mut(&rec.id).expect("checked above");
        entry.status = Status::Trusted;
        entry.last_nonce = Some(rec.nonce);

        let trust_list = self.trust_list();
        let ack = AckRecord::new(rec.nonce, trust_list.clone()).encode();
        let sealed = seal(&self.params, &rec.id.identity(), &ack, &mut self.rng).map_err(|_| RejectReason::Malformed)?;
        let env = Envelope {
            kind: FrameKind::TaAck,
            src: NodeId::BASE_STATION,
            dst: rec.id,
            msg_id: self.msg_id,
        };
        let frames = fragment(env, self.seq, &sealed).map_err(|_| RejectReason::Malformed)?;
        self.msg_id = self.msg_id.wrapping_add(1);
        self.seq = self.seq.wrapping_add(frames.len() as u16);
        Ok(TaAccepted {
            node: rec.id,
            nonce: rec.nonce,
            trust_list,
            ack: frames,
        })
    }

    /// Marks the node terminated. Returns false for unknown ids.
    pub fn terminate(&mut self, id: NodeId) -> bool {
        match self.db.get_mut(&id) {
            Some(r) => {
                r.status = Status::Terminated;
                true
            }
            None => false,
        }
    }
}
