//! Boneh-Franklin identity-based encryption (FullIdent) over the
//! supersingular curve y^2 = x^3 + 1 with a modified Tate pairing.

mod curve;
mod field;
pub mod files;
mod hash;
mod pairing;
mod params;
mod scheme;

use thiserror::Error;

pub use curve::{Curve, G1Point};
pub use hash::{gt_mask, hash_to_point, hash_to_scalar, sigma_mask, sigma_scalar};
pub use pairing::{pairing, pairing_invocations, GtElement};
pub use params::{
    is_probable_prime, setup, setup_with, MasterKey, Profile, PublicParams, SecurityConfig, DEFAULT_BLOCK_BITS,
    DEMO_P_HEX, DEMO_Q_HEX, HASH_SUITE, TOY_P, TOY_Q,
};
pub use scheme::{decrypt, encrypt, encrypt_with_sigma, extract, Ciphertext, PrivateKey};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IbeError {
    #[error("invalid security config: {0}")]
    InvalidConfig(String),
    #[error("identity must be non-empty")]
    EmptyIdentity,
    #[error("point is not on the curve")]
    NotOnCurve,
    #[error("degenerate pairing input")]
    DegeneratePairing,
    #[error("message of {len} bytes exceeds the {max}-byte block")]
    MessageTooLong { len: usize, max: usize },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("ciphertext rejected")]
    Reject,
}

impl PublicParams {
    /// e(a, b) under these parameters.
    pub fn pair(&self, a: &G1Point, b: &G1Point) -> Result<GtElement, IbeError> {
        pairing(self.curve(), self.q(), a, b)
    }
}
