use std::collections::{BTreeMap, BTreeSet};

use hmac::{Hmac, Mac};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::Sha256;

use super::bs::NodeSecrets;
use super::frame::{fragment, Envelope, Frame, FrameKind};
use super::messages::{open, seal, AckRecord, TaRecord};
use super::payload::{decode_payload, encode_payload, PayloadError};
use super::{Phase, ProtocolError, RejectReason};
use crate::ake::{self, AkeError, AkeMessage, SessionKey};
use crate::energy::{Category, EnergyConstants, EnergyLedger, Process};
use crate::ibe::{pairing_invocations, PrivateKey, PublicParams};
use crate::ids::NodeId;
use crate::secure_boot::{
    boot, BootChain, BootOutcome, BootReport, SecureAsset, SecureRequest, SecureService, TrustValue, World, WorldState,
};

pub const PROBE_TAG_LEN: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Initiator,
    Responder,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Session {
    pub key: SessionKey,
    pub nonce: u16,
    pub role: Role,
    pub confirmed: bool,
}

/// Key-confirmation tag: HMAC-SHA256(key, "probe" || sender || nonce), first
/// 8 bytes. Not part of the key exchange itself.
pub fn probe_tag(key: &[u8], sender: NodeId, nonce: u16) -> [u8; PROBE_TAG_LEN] {
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("any key length");
    mac.update(b"probe");
    mac.update(&sender.to_be_bytes());
    mac.update(&nonce.to_be_bytes());
    let full = mac.finalize().into_bytes();
    let mut tag = [0u8; PROBE_TAG_LEN];
    tag.copy_from_slice(&full[..PROBE_TAG_LEN]);
    tag
}

/// A sensor node: boot chain, secure world, lifecycle phase and ledger.
#[derive(Clone, Debug)]
pub struct SensorNode {
    id: NodeId,
    params: PublicParams,
    chain: BootChain,
    world: WorldState,
    phase: Phase,
    trust_value: Option<TrustValue>,
    trust_list: BTreeSet<NodeId>,
    used_nonces: BTreeSet<u16>,
    pending_ta: Option<u16>,
    seen_ake: BTreeSet<(NodeId, u16)>,
    sessions: BTreeMap<NodeId, Session>,
    ledger: EnergyLedger,
    constants: EnergyConstants,
    rng: ChaCha20Rng,
    seq: u16,
    msg_id: u16,
}

impl SensorNode {
    /// Installs the provisioned secrets. The key goes straight into the
    /// secure region; nothing is billed.
    pub fn new(id: NodeId, secrets: NodeSecrets, chain: BootChain, constants: EnergyConstants, rng_seed: u64) -> Self {
        let mut world = WorldState::new();
        world.install_key(0, secrets.key).expect("reset state is secure");
        SensorNode {
            id,
            params: secrets.params,
            chain,
            world,
            phase: Phase::Dp,
            trust_value: None,
            trust_list: BTreeSet::new(),
            used_nonces: BTreeSet::new(),
            pending_ta: None,
            seen_ake: BTreeSet::new(),
            sessions: BTreeMap::new(),
            ledger: EnergyLedger::new(),
            constants,
            rng: ChaCha20Rng::seed_from_u64(rng_seed),
            seq: 0,
            msg_id: 0,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn trust_value(&self) -> Option<&TrustValue> {
        self.trust_value.as_ref()
    }

    pub fn trust_list(&self) -> &BTreeSet<NodeId> {
        &self.trust_list
    }

    pub fn sessions(&self) -> &BTreeMap<NodeId, Session> {
        &self.sessions
    }

    pub fn session_with(&self, peer: NodeId) -> Option<&Session> {
        self.sessions.get(&peer)
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn chain(&self) -> &BootChain {
        &self.chain
    }

    pub fn chain_mut(&mut self) -> &mut BootChain {
        &mut self.chain
    }

    pub fn pending_nonce(&self) -> Option<u16> {
        self.pending_ta
    }

    /// Boot in the controlled environment before registration. Unbilled.
    pub fn controlled_boot(&mut self) -> Result<TrustValue, ProtocolError> {
        match boot(&self.chain).outcome {
            BootOutcome::Booted { trust_value } => Ok(trust_value),
            BootOutcome::Halted { failed_level } => Err(ProtocolError::BootHalted(failed_level)),
        }
    }

    pub(crate) fn set_registered(&mut self) {
        self.phase = Phase::Pdp;
    }

    /// Power-on in the field. Any previous trust state is discarded.
    pub fn boot(&mut self, t: u64) -> BootReport {
        self.world.reset();
        self.ledger.bill(&self.constants, t, Category::Boot, Process::Boot, 1);
        self.trust_list.clear();
        self.sessions.clear();
        self.pending_ta = None;
        let report = boot(&self.chain);
        match &report.outcome {
            BootOutcome::Booted { trust_value } => {
                self.trust_value = Some(trust_value.clone());
                self.phase = Phase::Dy;
            }
            BootOutcome::Halted { .. } => {
                self.trust_value = None;
                self.phase = Phase::Halted;
            }
        }
        report
    }

    fn fresh_nonce(&mut self) -> u16 {
        loop {
            let n: u16 = self.rng.gen();
            if self.used_nonces.insert(n) {
                return n;
            }
        }
    }

    fn switch_to(&mut self, t: u64, world: World, process: Process) {
        if self.world.switch_world(t, world).is_some() {
            self.ledger.bill(&self.constants, t, Category::Switch, process, 1);
        }
    }

    fn private_key(&mut self, t: u64) -> Result<PrivateKey, ProtocolError> {
        match self.world.secure_access(t, SecureRequest::ReadPrivateKey)? {
            SecureAsset::PrivateKey(k) => Ok(k),
            SecureAsset::Service(_) => unreachable!("key request returns a key"),
        }
    }

    fn bill_pairings(&mut self, t: u64, before: u64, process: Process) {
        let used = pairing_invocations() - before;
        self.ledger.bill(&self.constants, t, Category::Pairing, process, used);
    }

    fn next_frames(&mut self, kind: FrameKind, dst: NodeId, bytes: &[u8]) -> Result<Vec<Frame>, ProtocolError> {
        let env = Envelope {
            kind,
            src: self.id,
            dst,
            msg_id: self.msg_id,
        };
        let frames = fragment(env, self.seq, bytes)?;
        self.msg_id = self.msg_id.wrapping_add(1);
        self.seq = self.seq.wrapping_add(frames.len() as u16);
        Ok(frames)
    }

    fn transmit(&mut self, t: u64, kind: FrameKind, dst: NodeId, bytes: &[u8]) -> Result<Vec<Frame>, ProtocolError> {
        let frames = self.next_frames(kind, dst, bytes)?;
        let on_air: usize = frames.iter().map(Frame::len).sum();
        if let Some(process) = process_of(kind) {
            self.ledger.bill(&self.constants, t, Category::Tx, process, on_air as u64);
        }
        Ok(frames)
    }

    /// Bills reception of one frame.
    pub fn receive_frame(&mut self, t: u64, frame: &Frame) {
        if let Some(process) = process_of(frame.header.kind) {
            self.ledger
                .bill(&self.constants, t, Category::Rx, process, frame.len() as u64);
        }
    }

    /// Builds, encrypts and fragments the authentication request. The MAC
    /// and encryption run in the secure world the node booted into.
    ///
    /// Also allowed while a request is outstanding (retry with a fresh
    /// nonce) and when already trusted, which is how a node refreshes its
    /// trustID list.
    pub fn ta_request(&mut self, t: u64) -> Result<Vec<Frame>, ProtocolError> {
        if !matches!(self.phase, Phase::Dy | Phase::Ta | Phase::Trusted) {
            return Err(ProtocolError::WrongPhase {
                expected: Phase::Dy,
                actual: self.phase,
            });
        }
        let hm = self.trust_value.clone().expect("DY implies a trust value");
        let p = Process::TrustedAuth;
        self.switch_to(t, World::Secure, p);
        self.world.secure_access(t, SecureRequest::Execute(SecureService::Sha2))?;
        self.world.secure_access(t, SecureRequest::Execute(SecureService::Encrypt))?;
        let nonce = self.fresh_nonce();
        let record = TaRecord::new(self.id, hm, nonce).encode();
        self.ledger.bill(&self.constants, t, Category::Sha2, p, 1);
        self.ledger
            .bill(&self.constants, t, Category::Encrypt, p, record.len() as u64 * 8);
        let before = pairing_invocations();
        let sealed = seal(&self.params, &NodeId::BASE_STATION.identity(), &record, &mut self.rng)?;
        self.bill_pairings(t, before, p);
        let frames = self.transmit(t, FrameKind::TaRequest, NodeId::BASE_STATION, &sealed)?;
        self.pending_ta = Some(nonce);
        self.phase = Phase::Ta;
        Ok(frames)
    }

    /// Decrypts the ack, checks the echoed nonce and installs the trustID
    /// list. The node then leaves the secure world and is trusted.
    pub fn handle_ack(&mut self, t: u64, bytes: &[u8]) -> Result<Vec<NodeId>, RejectReason> {
        let Some(expected) = self.pending_ta.filter(|_| self.phase == Phase::Ta) else {
            return Err(RejectReason::StaleAck);
        };
        let p = Process::TrustedAuth;
        self.switch_to(t, World::Secure, p);
        let sk = self.private_key(t).map_err(|_| RejectReason::DecryptFailure)?;
        let before = pairing_invocations();
        let opened = open(&self.params, &sk, bytes);
        self.bill_pairings(t, before, p);
        let plain = opened.map_err(|_| RejectReason::DecryptFailure)?;
        let ack = AckRecord::decode(&plain).map_err(|_| RejectReason::Malformed)?;
        self.ledger.bill(&self.constants, t, Category::Sha2, p, 1);
        if !ack.mac_is_valid() {
            return Err(RejectReason::MacMismatch);
        }
        if ack.nonce != expected {
            return Err(RejectReason::StaleAck);
        }
        self.trust_list = ack.trust_ids.iter().copied().collect();
        self.pending_ta = None;
        self.switch_to(t, World::Normal, p);
        self.phase = Phase::Trusted;
        self.ledger.mark_trusted();
        Ok(ack.trust_ids)
    }

    /// Sends R = rQ_A to a listed peer and keeps the derived key.
    pub fn initiate_ake(&mut self, t: u64, peer: NodeId) -> Result<Vec<Frame>, ProtocolError> {
        if self.phase != Phase::Trusted {
            return Err(ProtocolError::WrongPhase {
                expected: Phase::Trusted,
                actual: self.phase,
            });
        }
        if !self.trust_list.contains(&peer) {
            return Err(ProtocolError::NotInTrustList(peer));
        }
        let p = Process::KeyExchange;
        let nonce = self.fresh_nonce();
        self.switch_to(t, World::Secure, p);
        let sk = self.private_key(t)?;
        let before = pairing_invocations();
        let result = ake::initiate(&self.params, &sk, self.id, peer, nonce, &mut self.rng);
        self.bill_pairings(t, before, p);
        self.switch_to(t, World::Normal, p);
        let (msg, key) = result?;
        let r_bytes = self.params.curve().encode_point(&msg.r_point);
        let payload = encode_payload(self.id, nonce, &r_bytes)?;
        let frames = self.transmit(t, FrameKind::Ake, peer, &payload)?;
        self.sessions.insert(
            peer,
            Session {
                key,
                nonce,
                role: Role::Initiator,
                confirmed: false,
            },
        );
        Ok(frames)
    }

    /// Receiver side of the key exchange. The trust-list check comes first
    /// and costs no pairing.
    pub fn peer_authenticate(&mut self, t: u64, src: NodeId, bytes: &[u8]) -> Result<SessionKey, RejectReason> {
        if self.phase != Phase::Trusted {
            return Err(RejectReason::NotTrusted);
        }
        let payload = decode_payload(bytes).map_err(|e| match e {
            PayloadError::MacMismatch => RejectReason::MacMismatch,
            _ => RejectReason::Malformed,
        })?;
        if payload.sender != src {
            return Err(RejectReason::Malformed);
        }
        if !self.trust_list.contains(&payload.sender) {
            return Err(RejectReason::NotInTrustList);
        }
        if self.seen_ake.contains(&(payload.sender, payload.nonce)) {
            return Err(RejectReason::NonceReplay);
        }
        let r_point = self
            .params
            .curve()
            .decode_point(&payload.message)
            .map_err(|_| RejectReason::BadPoint)?;
        let msg = AkeMessage {
            sender: payload.sender,
            receiver: self.id,
            r_point,
            nonce: payload.nonce,
            mac: payload.mac,
        };
        let p = Process::KeyExchange;
        self.switch_to(t, World::Secure, p);
        let sk = self.private_key(t).map_err(|_| RejectReason::NotTrusted)?;
        let before = pairing_invocations();
        let result = ake::respond(&self.params, &sk, &msg);
        self.bill_pairings(t, before, p);
        self.switch_to(t, World::Normal, p);
        let key = result.map_err(|e| match e {
            AkeError::BadPoint => RejectReason::BadPoint,
            AkeError::MacMismatch => RejectReason::MacMismatch,
            _ => RejectReason::Malformed,
        })?;
        self.seen_ake.insert((msg.sender, msg.nonce));
        self.sessions.insert(
            msg.sender,
            Session {
                key: key.clone(),
                nonce: msg.nonce,
                role: Role::Responder,
                confirmed: false,
            },
        );
        Ok(key)
    }

    /// Key-confirmation ping for an initiated session. Unbilled.
    pub fn probe(&mut self, peer: NodeId) -> Result<Option<Vec<Frame>>, ProtocolError> {
        let Some(s) = self.sessions.get(&peer).filter(|s| s.role == Role::Initiator) else {
            return Ok(None);
        };
        let tag = probe_tag(s.key.bytes(), self.id, s.nonce);
        let payload = encode_payload(self.id, s.nonce, &tag)?;
        Ok(Some(self.next_frames(FrameKind::Probe, peer, &payload)?))
    }

    pub fn check_probe(&mut self, src: NodeId, bytes: &[u8]) -> Result<(), RejectReason> {
        let payload = decode_payload(bytes).map_err(|_| RejectReason::Malformed)?;
        let session = self
            .sessions
            .get_mut(&src)
            .filter(|s| s.role == Role::Responder && s.nonce == payload.nonce && payload.sender == src)
            .ok_or(RejectReason::NoSession)?;
        if probe_tag(session.key.bytes(), src, payload.nonce)[..] != payload.message[..] {
            return Err(RejectReason::KeyConfirmationFailed);
        }
        session.confirmed = true;
        Ok(())
    }

    /// Revocation by the base station: trust state and sessions are dropped
    /// until the node boots and authenticates again.
    pub fn terminate(&mut self) {
        self.phase = Phase::Terminated;
        self.trust_list.clear();
        self.sessions.clear();
        self.pending_ta = None;
    }
}

fn process_of(kind: FrameKind) -> Option<Process> {
    match kind {
        FrameKind::TaRequest | FrameKind::TaAck => Some(Process::TrustedAuth),
        FrameKind::Ake => Some(Process::KeyExchange),
        FrameKind::Probe => None,
    }
}
