//! Radio frames: a 21-byte header followed by at most 106 payload bytes.
//!
//! Header layout (big-endian):
//!
//! ```text
//! 0      len        total frame length, header included
//! 1      kind
//! 2..4   seq        per-sender sequence number
//! 4..6   dst
//! 6..8   src
//! 8..10  msg_id     identifies the fragmented message
//! 10     frag_index
//! 11     frag_count
//! 12..21 zero padding
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::NodeId;

pub const HEADER_LEN: usize = 21;
pub const MAX_FRAME_LEN: usize = 127;
pub const MAX_PAYLOAD: usize = MAX_FRAME_LEN - HEADER_LEN;
pub const MAX_FRAGMENTS: usize = u8::MAX as usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("payload of {0} bytes exceeds {MAX_PAYLOAD}")]
    PayloadTooLong(usize),
    #[error("message of {0} bytes needs more than {MAX_FRAGMENTS} fragments")]
    TooManyFragments(usize),
    #[error("malformed frame: {0}")]
    Malformed(&'static str),
    #[error("message incomplete, missing fragments {missing:?}")]
    Incomplete { missing: Vec<u8> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    TaRequest,
    TaAck,
    Ake,
    Probe,
}

impl FrameKind {
    fn code(self) -> u8 {
        match self {
            FrameKind::TaRequest => 1,
            FrameKind::TaAck => 2,
            FrameKind::Ake => 3,
            FrameKind::Probe => 4,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            1 => FrameKind::TaRequest,
            2 => FrameKind::TaAck,
            3 => FrameKind::Ake,
            4 => FrameKind::Probe,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameHeader {
    pub kind: FrameKind,
    pub seq: u16,
    pub dst: NodeId,
    pub src: NodeId,
    pub msg_id: u16,
    pub frag_index: u8,
    pub frag_count: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub header: FrameHeader,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }

    pub fn encode(&self) -> Result<Vec<u8>, FrameError> {
        if self.payload.len() > MAX_PAYLOAD {
            return Err(FrameError::PayloadTooLong(self.payload.len()));
        }
        let h = &self.header;
        let mut out = Vec::with_capacity(self.len());
        out.push(self.len() as u8);
        out.push(h.kind.code());
        out.extend_from_slice(&h.seq.to_be_bytes());
        out.extend_from_slice(&h.dst.to_be_bytes());
        out.extend_from_slice(&h.src.to_be_bytes());
        out.extend_from_slice(&h.msg_id.to_be_bytes());
        out.push(h.frag_index);
        out.push(h.frag_count);
        out.resize(HEADER_LEN, 0);
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Frame, FrameError> {
        if bytes.len() < HEADER_LEN || bytes.len() > MAX_FRAME_LEN {
            return Err(FrameError::Malformed("length outside 21..=127"));
        }
        if bytes[0] as usize != bytes.len() {
            return Err(FrameError::Malformed("length field mismatch"));
        }
        let kind = FrameKind::from_code(bytes[1]).ok_or(FrameError::Malformed("unknown kind"))?;
        let u16_at = |i: usize| u16::from_be_bytes([bytes[i], bytes[i + 1]]);
        let header = FrameHeader {
            kind,
            seq: u16_at(2),
            dst: NodeId(u16_at(4)),
            src: NodeId(u16_at(6)),
            msg_id: u16_at(8),
            frag_index: bytes[10],
            frag_count: bytes[11],
        };
        if header.frag_count == 0 || header.frag_index >= header.frag_count {
            return Err(FrameError::Malformed("fragment index"));
        }
        Ok(Frame {
            header,
            payload: bytes[HEADER_LEN..].to_vec(),
        })
    }
}

/// Addressing shared by every fragment of one message.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub kind: FrameKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub msg_id: u16,
}

/// Splits `bytes` into ceil(len/106) frames (one empty frame for an empty
/// message) with consecutive sequence numbers starting at `first_seq`.
pub fn fragment(env: Envelope, first_seq: u16, bytes: &[u8]) -> Result<Vec<Frame>, FrameError> {
    let count = bytes.len().div_ceil(MAX_PAYLOAD).max(1);
    if count > MAX_FRAGMENTS {
        return Err(FrameError::TooManyFragments(bytes.len()));
    }
    let chunks: Vec<&[u8]> = if bytes.is_empty() {
        vec![&[]]
    } else {
        bytes.chunks(MAX_PAYLOAD).collect()
    };
    Ok(chunks
        .into_iter()
        .enumerate()
        .map(|(i, chunk)| Frame {
            header: FrameHeader {
                kind: env.kind,
                seq: first_seq.wrapping_add(i as u16),
                dst: env.dst,
                src: env.src,
                msg_id: env.msg_id,
                frag_index: i as u8,
                frag_count: count as u8,
            },
            payload: chunk.to_vec(),
        })
        .collect())
}

/// On-air bytes for a message of `len` bytes.
pub fn on_air_len(len: usize) -> usize {
    let frames = len.div_ceil(MAX_PAYLOAD).max(1);
    len + frames * HEADER_LEN
}

/// Reassembles one message from a complete set of its fragments.
pub fn reassemble(frames: &[Frame]) -> Result<Vec<u8>, FrameError> {
    let first = frames.first().ok_or(FrameError::Incomplete { missing: vec![0] })?;
    let count = first.header.frag_count;
    let mut parts: BTreeMap<u8, &[u8]> = BTreeMap::new();
    for f in frames {
        let h = &f.header;
        if h.frag_count != count || h.msg_id != first.header.msg_id || h.src != first.header.src {
            return Err(FrameError::Malformed("fragments from different messages"));
        }
        parts.insert(h.frag_index, &f.payload);
    }
    let missing: Vec<u8> = (0..count).filter(|i| !parts.contains_key(i)).collect();
    if !missing.is_empty() {
        return Err(FrameError::Incomplete { missing });
    }
    Ok(parts.values().flat_map(|p| p.iter().copied()).collect())
}

/// A fully reassembled message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub kind: FrameKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub msg_id: u16,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug)]
struct Partial {
    first_seen: u64,
    frames: Vec<Frame>,
}

/// Collects fragments per (src, msg_id) until a message is complete.
#[derive(Clone, Debug, Default)]
pub struct Reassembler {
    partial: BTreeMap<(NodeId, u16), Partial>,
}

impl Reassembler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: u64, frame: Frame) -> Result<Option<Message>, FrameError> {
        let key = (frame.header.src, frame.header.msg_id);
        let entry = self.partial.entry(key).or_insert_with(|| Partial {
            first_seen: t,
            frames: Vec::new(),
        });
        if let Some(f) = entry.frames.first() {
            if f.header.frag_count != frame.header.frag_count || f.header.kind != frame.header.kind {
                self.partial.remove(&key);
                return Err(FrameError::Malformed("fragments from different messages"));
            }
        }
        if entry.frames.iter().any(|f| f.header.frag_index == frame.header.frag_index) {
            return Ok(None);
        }
        entry.frames.push(frame);
        match reassemble(&entry.frames) {
            Ok(bytes) => {
                let done = self.partial.remove(&key).expect("entry exists");
                let h = &done.frames[0].header;
                Ok(Some(Message {
                    kind: h.kind,
                    src: h.src,
                    dst: h.dst,
                    msg_id: h.msg_id,
                    bytes,
                }))
            }
            Err(FrameError::Incomplete { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Drops messages whose first fragment arrived more than `timeout` ago.
    pub fn expire(&mut self, now: u64, timeout: u64) -> Vec<(NodeId, u16, FrameKind)> {
        let stale: Vec<(NodeId, u16)> = self
            .partial
            .iter()
            .filter(|(_, p)| now.saturating_sub(p.first_seen) > timeout)
            .map(|(k, _)| *k)
            .collect();
        stale
            .into_iter()
            .map(|k| {
                let p = self.partial.remove(&k).expect("listed above");
                (k.0, k.1, p.frames[0].header.kind)
            })
            .collect()
    }

    pub fn pending(&self) -> usize {
        self.partial.len()
    }
}
