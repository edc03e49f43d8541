//! Measured boot: each level hashes the next image and compares it to the
//! reference digest stored with the first-level bootloader. The platform's
//! trust value is an 8-hex-character window of the BL2 digest.

mod world;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::sha256;

pub use world::{AccessRecord, AccessViolation, SecureAsset, SecureRequest, SecureService, SwitchRecord, World, WorldState};

pub const DIGEST_HEX_LEN: usize = 64;
pub const TRUST_VALUE_LEN: usize = 8;
pub const DEFAULT_CHAIN_DEPTH: usize = 3;
pub const DEFAULT_TRUST_OFFSET: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BootError {
    #[error("trust value offset {0} leaves fewer than 8 hex characters")]
    OffsetOutOfRange(usize),
    #[error("a boot chain needs at least two levels, got {0}")]
    ChainTooShort(usize),
    #[error("no reference digest for level {0}")]
    MissingReference(usize),
    #[error("level {0} is outside the chain")]
    NoSuchLevel(usize),
    #[error("digest must be 64 lowercase hex characters")]
    BadDigest,
}

/// SHA-256 of an image as 64 lowercase hex characters.
pub fn measure(image: &[u8]) -> String {
    hex::encode(sha256(&[image]))
}

/// Eight lowercase hex characters identifying a booted platform.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TrustValue(String);

impl TrustValue {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

impl TryFrom<String> for TrustValue {
    type Error = BootError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        if s.len() == TRUST_VALUE_LEN && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
            Ok(TrustValue(s))
        } else {
            Err(BootError::BadDigest)
        }
    }
}

impl TryFrom<&[u8]> for TrustValue {
    type Error = BootError;

    fn try_from(b: &[u8]) -> Result<Self, Self::Error> {
        let s = std::str::from_utf8(b).map_err(|_| BootError::BadDigest)?;
        TrustValue::try_from(s.to_string())
    }
}

impl From<TrustValue> for String {
    fn from(v: TrustValue) -> Self {
        v.0
    }
}

impl fmt::Display for TrustValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The 8 hex characters of `digest` starting at `offset`.
pub fn trust_value(digest: &str, offset: usize) -> Result<TrustValue, BootError> {
    if digest.len() != DIGEST_HEX_LEN || !digest.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase()) {
        return Err(BootError::BadDigest);
    }
    if offset + TRUST_VALUE_LEN > DIGEST_HEX_LEN {
        return Err(BootError::OffsetOutOfRange(offset));
    }
    Ok(TrustValue(digest[offset..offset + TRUST_VALUE_LEN].to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootImage {
    pub level: usize,
    pub label: String,
    pub bytes: Vec<u8>,
}

/// Ordered images BL1..BLN plus the reference digests for levels 2..N that
/// ship inside BL1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BootChain {
    images: Vec<BootImage>,
    references: Vec<String>,
    offset: usize,
}

impl BootChain {
    /// Factory provisioning: references are taken from the pristine images.
    pub fn provision(images: Vec<Vec<u8>>, offset: usize) -> Result<Self, BootError> {
        let references = images.iter().skip(1).map(|img| measure(img)).collect();
        Self::with_references(images, references, offset)
    }

    pub fn with_references(images: Vec<Vec<u8>>, references: Vec<String>, offset: usize) -> Result<Self, BootError> {
        if images.len() < 2 {
            return Err(BootError::ChainTooShort(images.len()));
        }
        if offset + TRUST_VALUE_LEN > DIGEST_HEX_LEN {
            return Err(BootError::OffsetOutOfRange(offset));
        }
        if references.len() != images.len() - 1 {
            return Err(BootError::MissingReference(references.len() + 2));
        }
        let images = images
            .into_iter()
            .enumerate()
            .map(|(i, bytes)| BootImage {
                level: i + 1,
                label: format!("BL{}", i + 1),
                bytes,
            })
            .collect();
        Ok(BootChain {
            images,
            references,
            offset,
        })
    }

    pub fn depth(&self) -> usize {
        self.images.len()
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn images(&self) -> &[BootImage] {
        &self.images
    }

    pub fn image(&self, level: usize) -> Result<&BootImage, BootError> {
        level
            .checked_sub(1)
            .and_then(|i| self.images.get(i))
            .ok_or(BootError::NoSuchLevel(level))
    }

    pub fn reference(&self, level: usize) -> Result<&str, BootError> {
        if level < 2 || level > self.depth() {
            return Err(BootError::MissingReference(level));
        }
        Ok(&self.references[level - 2])
    }

    /// Overwrites one byte of an image after provisioning (flips its low bit).
    pub fn tamper(&mut self, level: usize, byte: usize) -> Result<(), BootError> {
        let idx = level.checked_sub(1).filter(|i| *i < self.images.len()).ok_or(BootError::NoSuchLevel(level))?;
        let img = &mut self.images[idx].bytes;
        if img.is_empty() {
            img.push(1);
        } else {
            let at = byte % img.len();
            img[at] ^= 1;
        }
        Ok(())
    }

    pub fn replace_image(&mut self, level: usize, bytes: Vec<u8>) -> Result<(), BootError> {
        let idx = level.checked_sub(1).filter(|i| *i < self.images.len()).ok_or(BootError::NoSuchLevel(level))?;
        self.images[idx].bytes = bytes;
        Ok(())
    }
}

/// Integrity bit of one level. Level 1 is the root of trust and always 1.
pub fn verify_level(chain: &BootChain, level: usize) -> Result<bool, BootError> {
    if level == 1 {
        return Ok(true);
    }
    let reference = chain.reference(level)?;
    Ok(measure(&chain.image(level)?.bytes) == reference)
}

/// One line of the measurement log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub level: usize,
    /// `None` for the root of trust, which nothing measures.
    pub digest: Option<String>,
    pub bit: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BootOutcome {
    Booted { trust_value: TrustValue },
    Halted { failed_level: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BootReport {
    pub outcome: BootOutcome,
    pub measurements: Vec<MeasurementRecord>,
}

impl BootReport {
    pub fn trust_value(&self) -> Option<&TrustValue> {
        match &self.outcome {
            BootOutcome::Booted { trust_value } => Some(trust_value),
            BootOutcome::Halted { .. } => None,
        }
    }
}

/// Walks the chain in order, halting at the first level whose measurement
/// does not match its reference. Later levels are never measured.
pub fn boot(chain: &BootChain) -> BootReport {
    let mut measurements = vec![MeasurementRecord {
        level: 1,
        digest: None,
        bit: 1,
    }];
    let mut bl2_digest = None;
    for level in 2..=chain.depth() {
        let digest = measure(&chain.images[level - 1].bytes);
        let ok = digest == chain.references[level - 2];
        measurements.push(MeasurementRecord {
            level,
            digest: Some(digest.clone()),
            bit: ok as u8,
        });
        if !ok {
            return BootReport {
                outcome: BootOutcome::Halted { failed_level: level },
                measurements,
            };
        }
        if level == 2 {
            bl2_digest = Some(digest);
        }
    }
    let digest = bl2_digest.expect("chains have at least two levels");
    let trust_value = trust_value(&digest, chain.offset).expect("offset validated at construction");
    BootReport {
        outcome: BootOutcome::Booted { trust_value },
        measurements,
    }
}

/// Boolean product of the integrity bits.
pub fn overall_integrity(bits: &[bool]) -> bool {
    bits.iter().all(|b| *b)
}

/// Deterministic stand-in firmware for a node: BL1 is shared, BL2 carries a
/// per-device configuration block so each platform measures differently.
pub fn default_images(node: u16, depth: usize) -> Vec<Vec<u8>> {
    (1..=depth)
        .map(|level| {
            let mut img = format!("BL{level} image v1.0\n").into_bytes();
            img.extend((0..256u32).map(|i| (i * 31 + level as u32 * 7) as u8));
            if level == 2 {
                img.extend_from_slice(format!("device-serial={node:05}\n").as_bytes());
            }
            img
        })
        .collect()
}
