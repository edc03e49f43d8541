//! The four hash functions of FullIdent, all built on SHA-256.

use num_bigint::BigUint;
use num_traits::One;

use super::curve::G1Point;
use super::pairing::GtElement;
use super::params::PublicParams;
use super::IbeError;
use crate::digest::sha256;

/// H1: identity string to a point of order q (MapToPoint).
///
/// y0 = SHA-256(id) mod p, x0 = cbrt(y0^2 - 1), result = cofactor * (x0, y0).
/// If the multiple is infinity the identity is re-hashed with a big-endian
/// u32 counter appended.
pub fn hash_to_point(params: &PublicParams, id: &str) -> Result<G1Point, IbeError> {
    if id.is_empty() {
        return Err(IbeError::EmptyIdentity);
    }
    let curve = params.curve();
    for counter in 0u32.. {
        let digest = if counter == 0 {
            sha256(&[id.as_bytes()])
        } else {
            sha256(&[id.as_bytes(), &counter.to_be_bytes()])
        };
        let y0 = BigUint::from_bytes_be(&digest) % params.p();
        let pt = curve.mul(params.cofactor(), &curve.point_from_y(&y0));
        if !pt.is_infinity() {
            return Ok(pt);
        }
    }
    unreachable!("counter space exhausted")
}

/// H2: GT element to an n-bit mask.
pub fn gt_mask(params: &PublicParams, g: &GtElement) -> Vec<u8> {
    let digest = sha256(&[&g.encode(params.curve())]);
    digest[..params.block_len()].to_vec()
}

/// H3: (sigma, m) to Z_q*.
pub fn sigma_scalar(params: &PublicParams, sigma: &[u8], m: &[u8]) -> BigUint {
    hash_to_scalar(params.q(), &[sigma, m])
}

/// H4: sigma to an n-bit mask.
pub fn sigma_mask(params: &PublicParams, sigma: &[u8]) -> Vec<u8> {
    sha256(&[sigma])[..params.block_len()].to_vec()
}

/// SHA-256 over the parts, reduced mod (q - 1) and shifted into [1, q - 1].
pub fn hash_to_scalar(q: &BigUint, parts: &[&[u8]]) -> BigUint {
    let digest = sha256(parts);
    BigUint::from_bytes_be(&digest) % (q - 1u32) + BigUint::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibe::params::{setup, SecurityConfig};

    #[test]
    fn empty_identity_rejected() {
        let (params, _) = setup(&SecurityConfig::toy(1)).unwrap();
        assert!(matches!(hash_to_point(&params, ""), Err(IbeError::EmptyIdentity)));
    }

    #[test]
    fn map_to_point_has_order_q() {
        let (params, _) = setup(&SecurityConfig::toy(1)).unwrap();
        for i in 0..200 {
            let pt = hash_to_point(&params, &format!("id-{i}")).unwrap();
            assert!(params.is_order_q(&pt));
        }
    }

    #[test]
    fn scalars_stay_in_range() {
        let q = BigUint::from(19u32);
        for i in 0u32..500 {
            let s = hash_to_scalar(&q, &[&i.to_be_bytes()]);
            assert!(s >= BigUint::one() && s < q);
        }
    }
}
