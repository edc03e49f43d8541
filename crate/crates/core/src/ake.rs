//! Identity-based one-pass authenticated key exchange.
//!
//! The initiator A picks r in Z_q*, sends R = r Q_A and derives
//! K_AB = e((r + h) S_A, Q_B); the responder B derives
//! K_BA = e(R + h Q_A, S_B) with h = H_ake(R, ID_A || ID_B). Both equal
//! e(Q_A, Q_B)^(s (r + h)). The responder never sends anything back.

use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::RngCore;
use thiserror::Error;

use crate::digest::{sha256, truncated_mac, MAC_LEN};
use crate::ibe::{hash_to_point, hash_to_scalar, G1Point, GtElement, IbeError, PrivateKey, PublicParams};
use crate::ids::NodeId;

pub const SESSION_KEY_LEN: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AkeError {
    #[error("R is not a point of order q")]
    BadPoint,
    #[error("message MAC mismatch")]
    MacMismatch,
    #[error("message addressed to {expected}, key belongs to {actual}")]
    WrongParty { expected: String, actual: String },
    #[error("r + h = 0 mod q")]
    Degenerate,
    #[error("shared secret is the identity of GT")]
    IdentitySecret,
    #[error(transparent)]
    Ibe(#[from] IbeError),
}

/// The single key-exchange message A -> B.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AkeMessage {
    pub sender: NodeId,
    pub receiver: NodeId,
    pub r_point: G1Point,
    pub nonce: u16,
    pub mac: [u8; MAC_LEN],
}

impl AkeMessage {
    /// MAC over the fields in payload order: sender || nonce || R.
    pub fn compute_mac(params: &PublicParams, sender: NodeId, nonce: u16, r_point: &G1Point) -> [u8; MAC_LEN] {
        let r_bytes = params.curve().encode_point(r_point);
        truncated_mac(&[&sender.to_be_bytes(), &nonce.to_be_bytes(), &r_bytes])
    }

    pub fn mac_is_valid(&self, params: &PublicParams) -> bool {
        Self::compute_mac(params, self.sender, self.nonce, &self.r_point) == self.mac
    }
}

/// Symmetric session key bound to the exchange transcript.
#[derive(Clone, PartialEq, Eq)]
pub struct SessionKey {
    key: [u8; SESSION_KEY_LEN],
    initiator: NodeId,
    responder: NodeId,
}

impl SessionKey {
    pub fn bytes(&self) -> &[u8; SESSION_KEY_LEN] {
        &self.key
    }

    pub fn initiator(&self) -> NodeId {
        self.initiator
    }

    pub fn responder(&self) -> NodeId {
        self.responder
    }
}

impl fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionKey({} -> {}, ..)", self.initiator, self.responder)
    }
}

/// h = SHA-256(R || ID_A || ID_B) mod (q - 1) + 1.
pub fn exchange_hash(params: &PublicParams, r_point: &G1Point, id_a: &str, id_b: &str) -> BigUint {
    let r_bytes = params.curve().encode_point(r_point);
    hash_to_scalar(params.q(), &[&r_bytes, id_a.as_bytes(), id_b.as_bytes()])
}

/// Session key = first 16 bytes of SHA-256(K || ID_A || ID_B || R).
pub fn kdf(
    params: &PublicParams,
    secret: &GtElement,
    initiator: NodeId,
    responder: NodeId,
    r_point: &G1Point,
) -> Result<SessionKey, AkeError> {
    if secret.is_one() {
        return Err(AkeError::IdentitySecret);
    }
    let digest = sha256(&[
        &secret.encode(params.curve()),
        initiator.identity().as_bytes(),
        responder.identity().as_bytes(),
        &params.curve().encode_point(r_point),
    ]);
    let mut key = [0u8; SESSION_KEY_LEN];
    key.copy_from_slice(&digest[..SESSION_KEY_LEN]);
    Ok(SessionKey {
        key,
        initiator,
        responder,
    })
}

fn check_owner(sk: &PrivateKey, id: NodeId) -> Result<(), AkeError> {
    if sk.identity() != id.identity() {
        return Err(AkeError::WrongParty {
            expected: id.identity(),
            actual: sk.identity().to_string(),
        });
    }
    Ok(())
}

/// K_AB = e((r + h) S_A, Q_B) for a given r. Also returns R and h.
pub fn initiator_secret(
    params: &PublicParams,
    sk_a: &PrivateKey,
    responder: NodeId,
    r: &BigUint,
) -> Result<(G1Point, GtElement), AkeError> {
    let q_a = hash_to_point(params, sk_a.identity())?;
    let q_b = hash_to_point(params, &responder.identity())?;
    let r_point = params.curve().mul(r, &q_a);
    let h = exchange_hash(params, &r_point, sk_a.identity(), &responder.identity());
    let exponent = (r + &h) % params.q();
    if exponent.is_zero() {
        return Err(AkeError::Degenerate);
    }
    let scaled = params.curve().mul(&exponent, sk_a.point());
    Ok((r_point, params.pair(&scaled, &q_b)?))
}

/// K_BA = e(R + h Q_A, S_B).
pub fn responder_secret(params: &PublicParams, sk_b: &PrivateKey, msg: &AkeMessage) -> Result<GtElement, AkeError> {
    let id_a = msg.sender.identity();
    let q_a = hash_to_point(params, &id_a)?;
    let h = exchange_hash(params, &msg.r_point, &id_a, sk_b.identity());
    let combined = params.curve().add(&msg.r_point, &params.curve().mul(&h, &q_a));
    Ok(params.pair(&combined, sk_b.point())?)
}

/// Builds the message for a caller-chosen r; fails with `Degenerate` when
/// r + h = 0 mod q.
pub fn initiate_with_scalar(
    params: &PublicParams,
    sk_a: &PrivateKey,
    sender: NodeId,
    receiver: NodeId,
    nonce: u16,
    r: &BigUint,
) -> Result<(AkeMessage, SessionKey), AkeError> {
    check_owner(sk_a, sender)?;
    let (r_point, secret) = initiator_secret(params, sk_a, receiver, r)?;
    let key = kdf(params, &secret, sender, receiver, &r_point)?;
    let mac = AkeMessage::compute_mac(params, sender, nonce, &r_point);
    Ok((
        AkeMessage {
            sender,
            receiver,
            r_point,
            nonce,
            mac,
        },
        key,
    ))
}

pub fn initiate<R: RngCore + ?Sized>(
    params: &PublicParams,
    sk_a: &PrivateKey,
    sender: NodeId,
    receiver: NodeId,
    nonce: u16,
    rng: &mut R,
) -> Result<(AkeMessage, SessionKey), AkeError> {
    loop {
        let r = params.random_scalar(rng);
        match initiate_with_scalar(params, sk_a, sender, receiver, nonce, &r) {
            Err(AkeError::Degenerate) | Err(AkeError::IdentitySecret) => continue,
            other => return other,
        }
    }
}

pub fn respond(params: &PublicParams, sk_b: &PrivateKey, msg: &AkeMessage) -> Result<SessionKey, AkeError> {
    check_owner(sk_b, msg.receiver)?;
    if !params.is_order_q(&msg.r_point) {
        return Err(AkeError::BadPoint);
    }
    if !msg.mac_is_valid(params) {
        return Err(AkeError::MacMismatch);
    }
    let secret = responder_secret(params, sk_b, msg)?;
    kdf(params, &secret, msg.sender, msg.receiver, &msg.r_point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibe::{extract, setup, SecurityConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn keys(seed: u64) -> (PublicParams, PrivateKey, PrivateKey) {
        let (params, master) = setup(&SecurityConfig::toy(seed)).unwrap();
        let a = extract(&params, &master, &NodeId(1).identity()).unwrap();
        let b = extract(&params, &master, &NodeId(2).identity()).unwrap();
        (params, a, b)
    }

    #[test]
    fn honest_runs_agree() {
        let (params, a, b) = keys(1);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for nonce in 0..30 {
            let (msg, ka) = initiate(&params, &a, NodeId(1), NodeId(2), nonce, &mut rng).unwrap();
            let kb = respond(&params, &b, &msg).unwrap();
            assert_eq!(ka, kb);
        }
    }

    #[test]
    fn kdf_binds_transcript() {
        let (params, _, _) = keys(2);
        let g = params.pair(params.generator(), params.generator()).unwrap();
        let r = params.generator().clone();
        let k1 = kdf(&params, &g, NodeId(1), NodeId(2), &r).unwrap();
        assert_eq!(k1, kdf(&params, &g, NodeId(1), NodeId(2), &r).unwrap());
        let g2 = g.mul(&g, params.p());
        assert_ne!(k1.bytes(), kdf(&params, &g2, NodeId(1), NodeId(2), &r).unwrap().bytes());
        assert_ne!(k1.bytes(), kdf(&params, &g, NodeId(1), NodeId(3), &r).unwrap().bytes());
        assert_eq!(
            kdf(&params, &GtElement::one(), NodeId(1), NodeId(2), &r),
            Err(AkeError::IdentitySecret)
        );
    }

    #[test]
    fn wrong_key_owner_rejected() {
        let (params, a, _) = keys(3);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        assert!(matches!(
            initiate(&params, &a, NodeId(2), NodeId(1), 0, &mut rng),
            Err(AkeError::WrongParty { .. })
        ));
    }

    #[test]
    fn tampered_r_rejected() {
        let (params, a, b) = keys(4);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let (msg, _) = initiate(&params, &a, NodeId(1), NodeId(2), 9, &mut rng).unwrap();
        // another valid point of order q with the old MAC
        let mut forged = msg.clone();
        forged.r_point = params.curve().double(&msg.r_point);
        assert_eq!(respond(&params, &b, &forged), Err(AkeError::MacMismatch));
        let mut off = msg.clone();
        off.r_point = G1Point::new(1u32.into(), 1u32.into());
        assert_eq!(respond(&params, &b, &off), Err(AkeError::BadPoint));
        let mut nonce = msg;
        nonce.nonce ^= 1;
        assert_eq!(respond(&params, &b, &nonce), Err(AkeError::MacMismatch));
    }
}
