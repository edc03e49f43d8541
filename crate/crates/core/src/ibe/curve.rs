//! Affine arithmetic on the supersingular curve y^2 = x^3 + 1 over F_p.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::field;
use super::IbeError;

/// A point of E(F_p), or the point at infinity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum G1Point {
    Infinity,
    Affine { x: BigUint, y: BigUint },
}

impl G1Point {
    pub fn new(x: BigUint, y: BigUint) -> Self {
        G1Point::Affine { x, y }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, G1Point::Infinity)
    }

    pub fn coords(&self) -> Option<(&BigUint, &BigUint)> {
        match self {
            G1Point::Infinity => None,
            G1Point::Affine { x, y } => Some((x, y)),
        }
    }
}

/// The curve E: y^2 = x^3 + 1 over F_p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Curve {
    p: BigUint,
}

impl Curve {
    pub fn new(p: BigUint) -> Self {
        Curve { p }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.p
    }

    /// Bytes needed for one coordinate.
    pub fn coord_len(&self) -> usize {
        (self.p.bits() as usize).div_ceil(8)
    }

    pub fn contains(&self, pt: &G1Point) -> bool {
        match pt {
            G1Point::Infinity => true,
            G1Point::Affine { x, y } => {
                if x >= &self.p || y >= &self.p {
                    return false;
                }
                let p = &self.p;
                let lhs = field::mul(y, y, p);
                let rhs = field::add(&field::mul(&field::mul(x, x, p), x, p), &BigUint::one(), p);
                lhs == rhs
            }
        }
    }

    pub fn negate(&self, pt: &G1Point) -> G1Point {
        match pt {
            G1Point::Infinity => G1Point::Infinity,
            G1Point::Affine { x, y } => G1Point::new(x.clone(), field::neg(y, &self.p)),
        }
    }

    /// Slope of the line through a and b (tangent when a == b), or `None`
    /// when the line is vertical.
    pub(crate) fn slope(&self, a: (&BigUint, &BigUint), b: (&BigUint, &BigUint)) -> Option<BigUint> {
        let p = &self.p;
        let (x1, y1) = a;
        let (x2, y2) = b;
        if x1 == x2 {
            if y1 != y2 || y1.is_zero() {
                return None;
            }
            let num = field::mul(&BigUint::from(3u32), &field::mul(x1, x1, p), p);
            let den = field::add(y1, y1, p);
            Some(field::mul(&num, &field::inv(&den, p)?, p))
        } else {
            let num = field::sub(y2, y1, p);
            let den = field::sub(x2, x1, p);
            Some(field::mul(&num, &field::inv(&den, p)?, p))
        }
    }

    pub fn add(&self, a: &G1Point, b: &G1Point) -> G1Point {
        let (pa, pb) = match (a.coords(), b.coords()) {
            (None, _) => return b.clone(),
            (_, None) => return a.clone(),
            (Some(pa), Some(pb)) => (pa, pb),
        };
        let Some(lambda) = self.slope(pa, pb) else {
            return G1Point::Infinity;
        };
        self.chord_point(&lambda, pa, pb.0)
    }

    /// Third intersection point, negated: the sum of two points on a line
    /// with slope `lambda`.
    pub(crate) fn chord_point(&self, lambda: &BigUint, a: (&BigUint, &BigUint), x2: &BigUint) -> G1Point {
        let p = &self.p;
        let (x1, y1) = a;
        let x3 = field::sub(&field::sub(&field::mul(lambda, lambda, p), x1, p), x2, p);
        let y3 = field::sub(&field::mul(lambda, &field::sub(x1, &x3, p), p), y1, p);
        G1Point::new(x3, y3)
    }

    pub fn double(&self, a: &G1Point) -> G1Point {
        self.add(a, a)
    }

    pub fn mul(&self, k: &BigUint, pt: &G1Point) -> G1Point {
        let mut acc = G1Point::Infinity;
        for i in (0..k.bits()).rev() {
            acc = self.double(&acc);
            if k.bit(i) {
                acc = self.add(&acc, pt);
            }
        }
        acc
    }

    /// Point with the given y coordinate; every y has exactly one x because
    /// cubing is a bijection on F_p when p = 2 mod 3.
    pub fn point_from_y(&self, y: &BigUint) -> G1Point {
        let p = &self.p;
        let y = y % p;
        let rhs = field::sub(&field::mul(&y, &y, p), &BigUint::one(), p);
        G1Point::new(field::cube_root(&rhs, p), y)
    }

    /// Fixed-width big-endian `x || y`; infinity encodes as all zeros, which
    /// is never a curve point since (0, 0) does not satisfy the equation.
    pub fn encode_point(&self, pt: &G1Point) -> Vec<u8> {
        let len = self.coord_len();
        let mut out = vec![0u8; 2 * len];
        if let Some((x, y)) = pt.coords() {
            write_fixed(&mut out[..len], x);
            write_fixed(&mut out[len..], y);
        }
        out
    }

    pub fn decode_point(&self, bytes: &[u8]) -> Result<G1Point, IbeError> {
        let len = self.coord_len();
        if bytes.len() != 2 * len {
            return Err(IbeError::Malformed(format!(
                "point encoding is {} bytes, expected {}",
                bytes.len(),
                2 * len
            )));
        }
        if bytes.iter().all(|b| *b == 0) {
            return Ok(G1Point::Infinity);
        }
        let pt = G1Point::new(
            BigUint::from_bytes_be(&bytes[..len]),
            BigUint::from_bytes_be(&bytes[len..]),
        );
        if !self.contains(&pt) {
            return Err(IbeError::NotOnCurve);
        }
        Ok(pt)
    }
}

pub(crate) fn write_fixed(out: &mut [u8], v: &BigUint) {
    let bytes = v.to_bytes_be();
    debug_assert!(bytes.len() <= out.len());
    let start = out.len() - bytes.len();
    out[start..].copy_from_slice(&bytes);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> Curve {
        Curve::new(BigUint::from(227u32))
    }

    fn all_points(c: &Curve) -> Vec<G1Point> {
        let mut pts = vec![G1Point::Infinity];
        for x in 0u32..227 {
            for y in 0u32..227 {
                let pt = G1Point::new(x.into(), y.into());
                if c.contains(&pt) {
                    pts.push(pt);
                }
            }
        }
        pts
    }

    #[test]
    fn group_order_is_p_plus_one() {
        let c = toy();
        let pts = all_points(&c);
        assert_eq!(pts.len(), 228);
        for pt in &pts {
            assert!(c.mul(&BigUint::from(228u32), pt).is_infinity());
        }
    }

    #[test]
    fn point_from_y_lands_on_curve() {
        let c = toy();
        for y in 0u32..227 {
            assert!(c.contains(&c.point_from_y(&y.into())));
        }
    }

    #[test]
    fn encoding_roundtrip_and_rejection() {
        let c = toy();
        let pt = c.point_from_y(&BigUint::from(5u32));
        let enc = c.encode_point(&pt);
        assert_eq!(enc.len(), 2);
        assert_eq!(c.decode_point(&enc).unwrap(), pt);
        assert_eq!(c.decode_point(&[0, 0]).unwrap(), G1Point::Infinity);
        assert!(matches!(c.decode_point(&[1, 1]), Err(IbeError::NotOnCurve)));
        assert!(c.decode_point(&[1]).is_err());
    }

    proptest! {
        #[test]
        fn closure_and_associativity(a in 0u32..227, b in 0u32..227, k in 0u32..500) {
            let c = toy();
            let pa = c.point_from_y(&a.into());
            let pb = c.point_from_y(&b.into());
            let sum = c.add(&pa, &pb);
            prop_assert!(c.contains(&sum));
            prop_assert_eq!(c.add(&pb, &pa), sum.clone());
            let k = BigUint::from(k);
            let ka = c.mul(&k, &pa);
            prop_assert!(c.contains(&ka));
            // k(a + b) = ka + kb
            prop_assert_eq!(c.mul(&k, &sum), c.add(&ka, &c.mul(&k, &pb)));
            prop_assert!(c.add(&pa, &c.negate(&pa)).is_infinity());
        }
    }
}
