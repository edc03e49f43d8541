//! Authentication request/acknowledgement records and the chunked IBE
//! envelope that carries them.
//!
//! Request plaintext (20 bytes):
//! `A(2) || S(2) || ID_A(2) || Hm'(8 ASCII hex) || N(2) || mac(4)`,
//! mac = trunc4 SHA-256(ID_A || Hm' || N).
//!
//! Ack plaintext: `N(2) || trustID list (2 bytes per id) || mac(4)`,
//! mac = trunc4 SHA-256(N || list).

use rand::RngCore;

use crate::digest::{truncated_mac, MAC_LEN};
use crate::ibe::{decrypt, encrypt, Ciphertext, IbeError, PrivateKey, PublicParams};
use crate::ids::NodeId;
use crate::secure_boot::{TrustValue, TRUST_VALUE_LEN};

pub const TA_RECORD_LEN: usize = 2 + 2 + 2 + TRUST_VALUE_LEN + 2 + MAC_LEN;
pub const TRUST_ID_LEN: usize = 2;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum RecordError {
    #[error("record has the wrong length or layout")]
    Malformed,
    #[error("record MAC mismatch")]
    MacMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaRecord {
    pub from: NodeId,
    pub to: NodeId,
    pub id: NodeId,
    pub trust_value: TrustValue,
    pub nonce: u16,
    pub mac: [u8; MAC_LEN],
}

impl TaRecord {
    pub fn new(id: NodeId, trust_value: TrustValue, nonce: u16) -> Self {
        let mac = Self::compute_mac(id, &trust_value, nonce);
        TaRecord {
            from: id,
            to: NodeId::BASE_STATION,
            id,
            trust_value,
            nonce,
            mac,
        }
    }

    pub fn compute_mac(id: NodeId, hm: &TrustValue, nonce: u16) -> [u8; MAC_LEN] {
        truncated_mac(&[&id.to_be_bytes(), hm.as_bytes(), &nonce.to_be_bytes()])
    }

    pub fn mac_is_valid(&self) -> bool {
        Self::compute_mac(self.id, &self.trust_value, self.nonce) == self.mac
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(TA_RECORD_LEN);
        out.extend_from_slice(&self.from.to_be_bytes());
        out.extend_from_slice(&self.to.to_be_bytes());
        out.extend_from_slice(&self.id.to_be_bytes());
        out.extend_from_slice(self.trust_value.as_bytes());
        out.extend_from_slice(&self.nonce.to_be_bytes());
        out.extend_from_slice(&self.mac);
        out
    }

    /// Parses the layout only; the MAC is checked separately.
    pub fn decode(b: &[u8]) -> Result<Self, RecordError> {
        if b.len() != TA_RECORD_LEN {
            return Err(RecordError::Malformed);
        }
        let id_at = |i: usize| NodeId::from_be_bytes([b[i], b[i + 1]]);
        let trust_value = TrustValue::try_from(&b[6..14]).map_err(|_| RecordError::Malformed)?;
        let mut mac = [0u8; MAC_LEN];
        mac.copy_from_slice(&b[16..20]);
        Ok(TaRecord {
            from: id_at(0),
            to: id_at(2),
            id: id_at(4),
            trust_value,
            nonce: u16::from_be_bytes([b[14], b[15]]),
            mac,
        })
    }
}

pub fn encode_trust_list(ids: &[NodeId]) -> Vec<u8> {
    ids.iter().flat_map(|id| id.to_be_bytes()).collect()
}

pub fn decode_trust_list(bytes: &[u8]) -> Result<Vec<NodeId>, RecordError> {
    if !bytes.len().is_multiple_of(TRUST_ID_LEN) {
        return Err(RecordError::Malformed);
    }
    Ok(bytes.chunks(2).map(|c| NodeId::from_be_bytes([c[0], c[1]])).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AckRecord {
    pub nonce: u16,
    pub trust_ids: Vec<NodeId>,
    pub mac: [u8; MAC_LEN],
}

impl AckRecord {
    pub fn new(nonce: u16, trust_ids: Vec<NodeId>) -> Self {
        let mac = truncated_mac(&[&nonce.to_be_bytes(), &encode_trust_list(&trust_ids)]);
        AckRecord { nonce, trust_ids, mac }
    }

    pub fn mac_is_valid(&self) -> bool {
        truncated_mac(&[&self.nonce.to_be_bytes(), &encode_trust_list(&self.trust_ids)]) == self.mac
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.nonce.to_be_bytes().to_vec();
        out.extend(encode_trust_list(&self.trust_ids));
        out.extend_from_slice(&self.mac);
        out
    }

    pub fn decode(b: &[u8]) -> Result<Self, RecordError> {
        if b.len() < 2 + MAC_LEN {
            return Err(RecordError::Malformed);
        }
        let split = b.len() - MAC_LEN;
        let mut mac = [0u8; MAC_LEN];
        mac.copy_from_slice(&b[split..]);
        Ok(AckRecord {
            nonce: u16::from_be_bytes([b[0], b[1]]),
            trust_ids: decode_trust_list(&b[2..split])?,
            mac,
        })
    }
}

/// Encrypts a plaintext of any length (up to 255 blocks) to `id` as
/// `chunk_count(1) || ciphertext...`, one FullIdent ciphertext per n-bit block.
pub fn seal<R: RngCore + ?Sized>(
    params: &PublicParams,
    id: &str,
    plaintext: &[u8],
    rng: &mut R,
) -> Result<Vec<u8>, IbeError> {
    let block = params.block_len();
    let chunks: Vec<&[u8]> = if plaintext.is_empty() {
        vec![&[]]
    } else {
        plaintext.chunks(block).collect()
    };
    if chunks.len() > u8::MAX as usize {
        return Err(IbeError::MessageTooLong {
            len: plaintext.len(),
            max: block * u8::MAX as usize,
        });
    }
    let mut out = vec![chunks.len() as u8];
    for chunk in chunks {
        out.extend(encrypt(params, id, chunk, rng)?.encode(params));
    }
    Ok(out)
}

/// Number of pairings `seal`/`open` evaluate for a plaintext length.
pub fn sealed_blocks(params: &PublicParams, plaintext_len: usize) -> usize {
    plaintext_len.div_ceil(params.block_len()).max(1)
}

pub fn sealed_len(params: &PublicParams, plaintext_len: usize) -> usize {
    let blocks = sealed_blocks(params, plaintext_len);
    1 + blocks * (params.point_len() + params.block_len() + 1) + plaintext_len
}

pub fn open(params: &PublicParams, sk: &PrivateKey, bytes: &[u8]) -> Result<Vec<u8>, IbeError> {
    let (&count, mut rest) = bytes
        .split_first()
        .ok_or_else(|| IbeError::Malformed("empty envelope".into()))?;
    if count == 0 {
        return Err(IbeError::Malformed("zero chunks".into()));
    }
    let mut out = Vec::new();
    for _ in 0..count {
        let (c, used) = Ciphertext::decode(params, rest)?;
        out.extend(decrypt(params, sk, &c)?);
        rest = &rest[used..];
    }
    if !rest.is_empty() {
        return Err(IbeError::Malformed("trailing bytes".into()));
    }
    Ok(out)
}
