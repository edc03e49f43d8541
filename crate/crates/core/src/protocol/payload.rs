//! Application payload: sender(2) || nonce(2) || message || mac(4), where the
//! MAC is the truncated SHA-256 of everything before it.

use serde::{Deserialize, Serialize};

use super::frame::MAX_PAYLOAD;
use crate::digest::{truncated_mac, MAC_LEN};
use crate::ids::NodeId;

pub const PAYLOAD_OVERHEAD: usize = 2 + 2 + MAC_LEN;
pub const MAX_MESSAGE: usize = MAX_PAYLOAD - PAYLOAD_OVERHEAD;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IbeTrustPayload {
    pub sender: NodeId,
    pub nonce: u16,
    pub message: Vec<u8>,
    pub mac: [u8; MAC_LEN],
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum PayloadError {
    #[error("message of {0} bytes exceeds {MAX_MESSAGE}")]
    TooLong(usize),
    #[error("payload shorter than {PAYLOAD_OVERHEAD} bytes")]
    TooShort,
    #[error("payload MAC mismatch")]
    MacMismatch,
}

pub fn payload_mac(sender: NodeId, nonce: u16, message: &[u8]) -> [u8; MAC_LEN] {
    truncated_mac(&[&sender.to_be_bytes(), &nonce.to_be_bytes(), message])
}

pub fn encode_payload(sender: NodeId, nonce: u16, message: &[u8]) -> Result<Vec<u8>, PayloadError> {
    if message.len() > MAX_MESSAGE {
        return Err(PayloadError::TooLong(message.len()));
    }
    let mut out = Vec::with_capacity(message.len() + PAYLOAD_OVERHEAD);
    out.extend_from_slice(&sender.to_be_bytes());
    out.extend_from_slice(&nonce.to_be_bytes());
    out.extend_from_slice(message);
    out.extend_from_slice(&payload_mac(sender, nonce, message));
    Ok(out)
}

pub fn decode_payload(bytes: &[u8]) -> Result<IbeTrustPayload, PayloadError> {
    if bytes.len() < PAYLOAD_OVERHEAD {
        return Err(PayloadError::TooShort);
    }
    if bytes.len() > MAX_PAYLOAD {
        return Err(PayloadError::TooLong(bytes.len() - PAYLOAD_OVERHEAD));
    }
    let sender = NodeId::from_be_bytes([bytes[0], bytes[1]]);
    let nonce = u16::from_be_bytes([bytes[2], bytes[3]]);
    let split = bytes.len() - MAC_LEN;
    let message = bytes[4..split].to_vec();
    let mut mac = [0u8; MAC_LEN];
    mac.copy_from_slice(&bytes[split..]);
    if payload_mac(sender, nonce, &message) != mac {
        return Err(PayloadError::MacMismatch);
    }
    Ok(IbeTrustPayload {
        sender,
        nonce,
        message,
        mac,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let p = encode_payload(NodeId(1), 0x00ff, b"hi").unwrap();
        assert_eq!(p.len(), 10);
        assert_eq!(&p[..6], &[0, 1, 0, 0xff, b'h', b'i']);
        let d = decode_payload(&p).unwrap();
        assert_eq!((d.sender, d.nonce, d.message.as_slice()), (NodeId(1), 0xff, &b"hi"[..]));
    }

    #[test]
    fn bounds() {
        assert_eq!(encode_payload(NodeId(1), 0, &[0; 99]), Err(PayloadError::TooLong(99)));
        assert_eq!(encode_payload(NodeId(1), 0, &[0; 98]).unwrap().len(), 106);
        assert_eq!(decode_payload(&[0; 7]), Err(PayloadError::TooShort));
    }

    #[test]
    fn every_bit_flip_detected() {
        let p = encode_payload(NodeId(3), 77, b"payload").unwrap();
        for bit in 0..p.len() * 8 {
            let mut q = p.clone();
            q[bit / 8] ^= 1 << (bit % 8);
            assert_eq!(decode_payload(&q), Err(PayloadError::MacMismatch), "bit {bit}");
        }
    }
}
