//! Key extraction and FullIdent encryption.

use std::fmt;

use rand::RngCore;

use super::curve::G1Point;
use super::hash::{gt_mask, hash_to_point, sigma_mask, sigma_scalar};
use super::pairing::pairing;
use super::params::{MasterKey, PublicParams};
use super::IbeError;

/// Private key d = s * H1(id) together with its identity.
#[derive(Clone, PartialEq, Eq)]
pub struct PrivateKey {
    identity: String,
    point: G1Point,
}

impl PrivateKey {
    pub fn from_parts(identity: String, point: G1Point) -> Self {
        PrivateKey { identity, point }
    }

    pub fn identity(&self) -> &str {
        &self.identity
    }

    pub fn point(&self) -> &G1Point {
        &self.point
    }

    /// Checks e(d, P) = e(H1(id), sP) without the master key.
    pub fn is_consistent(&self, params: &PublicParams) -> Result<bool, IbeError> {
        let q_id = hash_to_point(params, &self.identity)?;
        let lhs = pairing(params.curve(), params.q(), &self.point, params.generator())?;
        let rhs = pairing(params.curve(), params.q(), &q_id, params.public_key())?;
        Ok(lhs == rhs)
    }
}

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrivateKey").field("identity", &self.identity).finish_non_exhaustive()
    }
}

pub fn extract(params: &PublicParams, master: &MasterKey, id: &str) -> Result<PrivateKey, IbeError> {
    let q_id = hash_to_point(params, id)?;
    Ok(PrivateKey {
        identity: id.to_string(),
        point: params.curve().mul(master.scalar(), &q_id),
    })
}

/// FullIdent ciphertext (U, V, W).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub u: G1Point,
    pub v: Vec<u8>,
    pub w: Vec<u8>,
}

impl Ciphertext {
    /// `U || V || len(W) || W`, with U fixed-width and V exactly n/8 bytes.
    pub fn encode(&self, params: &PublicParams) -> Vec<u8> {
        let mut out = params.curve().encode_point(&self.u);
        out.extend_from_slice(&self.v);
        out.push(self.w.len() as u8);
        out.extend_from_slice(&self.w);
        out
    }

    /// Decodes one ciphertext from the front of `bytes`, returning it with
    /// the number of bytes consumed.
    pub fn decode(params: &PublicParams, bytes: &[u8]) -> Result<(Ciphertext, usize), IbeError> {
        let point_len = params.point_len();
        let n = params.block_len();
        if bytes.len() < point_len + n + 1 {
            return Err(IbeError::Malformed("truncated ciphertext".into()));
        }
        let u = params.curve().decode_point(&bytes[..point_len])?;
        let v = bytes[point_len..point_len + n].to_vec();
        let w_len = bytes[point_len + n] as usize;
        let start = point_len + n + 1;
        if w_len > n || bytes.len() < start + w_len {
            return Err(IbeError::Malformed("bad W length".into()));
        }
        let w = bytes[start..start + w_len].to_vec();
        Ok((Ciphertext { u, v, w }, start + w_len))
    }

    pub fn encoded_len(&self, params: &PublicParams) -> usize {
        params.point_len() + params.block_len() + 1 + self.w.len()
    }
}

fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

/// FullIdent encryption of a single block (|m| <= n/8 bytes).
pub fn encrypt<R: RngCore + ?Sized>(
    params: &PublicParams,
    id: &str,
    m: &[u8],
    rng: &mut R,
) -> Result<Ciphertext, IbeError> {
    let mut sigma = vec![0u8; params.block_len()];
    rng.fill_bytes(&mut sigma);
    encrypt_with_sigma(params, id, m, &sigma)
}

/// Encryption with caller-chosen sigma. Sigma fixes r = H3(sigma, m), so the
/// ciphertext is fully determined; used for known-answer tests.
pub fn encrypt_with_sigma(params: &PublicParams, id: &str, m: &[u8], sigma: &[u8]) -> Result<Ciphertext, IbeError> {
    let n = params.block_len();
    if m.len() > n {
        return Err(IbeError::MessageTooLong { len: m.len(), max: n });
    }
    if sigma.len() != n {
        return Err(IbeError::Malformed(format!("sigma must be {n} bytes")));
    }
    let q_id = hash_to_point(params, id)?;
    let r = sigma_scalar(params, sigma, m);
    let u = params.curve().mul(&r, params.generator());
    let g = pairing(params.curve(), params.q(), &q_id, params.public_key())?.pow(&r, params.p());
    let v = xor(sigma, &gt_mask(params, &g));
    let w = xor(m, &sigma_mask(params, sigma));
    Ok(Ciphertext { u, v, w })
}

/// FullIdent decryption with the Fujisaki-Okamoto re-encryption check.
pub fn decrypt(params: &PublicParams, sk: &PrivateKey, c: &Ciphertext) -> Result<Vec<u8>, IbeError> {
    let n = params.block_len();
    if c.v.len() != n || c.w.len() > n {
        return Err(IbeError::Malformed("ciphertext block sizes".into()));
    }
    if !params.curve().contains(&c.u) {
        return Err(IbeError::NotOnCurve);
    }
    if c.u.is_infinity() {
        return Err(IbeError::Reject);
    }
    let g = pairing(params.curve(), params.q(), sk.point(), &c.u)?;
    let sigma = xor(&c.v, &gt_mask(params, &g));
    let m = xor(&c.w, &sigma_mask(params, &sigma));
    let r = sigma_scalar(params, &sigma, &m);
    if params.curve().mul(&r, params.generator()) != c.u {
        return Err(IbeError::Reject);
    }
    Ok(m)
}
