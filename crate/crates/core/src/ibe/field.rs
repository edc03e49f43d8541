//! Prime field F_p and its quadratic extension F_{p^2}.
//!
//! F_{p^2} is represented as F_p[w] / (w^2 + w + 1). The polynomial is
//! irreducible whenever p = 2 mod 3, and w is then a primitive cube root of
//! unity, which is exactly the constant the distortion map needs.

use num_bigint::BigUint;
use num_traits::{One, Zero};

pub(crate) fn add(a: &BigUint, b: &BigUint, p: &BigUint) -> BigUint {
    let s = a + b;
    if &s >= p {
        s - p
    } else {
        s
    }
}

pub(crate) fn sub(a: &BigUint, b: &BigUint, p: &BigUint) -> BigUint {
    if a >= b {
        a - b
    } else {
        p - (b - a)
    }
}

pub(crate) fn mul(a: &BigUint, b: &BigUint, p: &BigUint) -> BigUint {
    (a * b) % p
}

pub(crate) fn neg(a: &BigUint, p: &BigUint) -> BigUint {
    if a.is_zero() {
        BigUint::zero()
    } else {
        p - a
    }
}

pub(crate) fn inv(a: &BigUint, p: &BigUint) -> Option<BigUint> {
    if a.is_zero() {
        return None;
    }
    a.modinv(p)
}

/// Unique cube root in F_p for p = 2 mod 3: a^((2p - 1) / 3).
pub(crate) fn cube_root(a: &BigUint, p: &BigUint) -> BigUint {
    let e = ((p << 1u32) - 1u32) / 3u32;
    a.modpow(&e, p)
}

/// Element c0 + c1*w of F_{p^2}.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Fp2 {
    pub c0: BigUint,
    pub c1: BigUint,
}

impl Fp2 {
    pub fn one() -> Self {
        Fp2 {
            c0: BigUint::one(),
            c1: BigUint::zero(),
        }
    }

    pub fn from_base(c0: BigUint) -> Self {
        Fp2 {
            c0,
            c1: BigUint::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c0.is_zero() && self.c1.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.c0.is_one() && self.c1.is_zero()
    }

    pub fn sub(&self, other: &Fp2, p: &BigUint) -> Fp2 {
        Fp2 {
            c0: sub(&self.c0, &other.c0, p),
            c1: sub(&self.c1, &other.c1, p),
        }
    }

    // (a + bw)(c + dw) = (ac - bd) + (ad + bc - bd)w, using w^2 = -1 - w
    pub fn mul(&self, other: &Fp2, p: &BigUint) -> Fp2 {
        let ac = mul(&self.c0, &other.c0, p);
        let bd = mul(&self.c1, &other.c1, p);
        let ad_bc = (&self.c0 * &other.c1 + &self.c1 * &other.c0) % p;
        Fp2 {
            c0: sub(&ac, &bd, p),
            c1: sub(&ad_bc, &bd, p),
        }
    }

    pub fn square(&self, p: &BigUint) -> Fp2 {
        self.mul(self, p)
    }

    /// Image under the p-power Frobenius: a + b w^2 = (a - b) - b w.
    pub fn conjugate(&self, p: &BigUint) -> Fp2 {
        Fp2 {
            c0: sub(&self.c0, &self.c1, p),
            c1: neg(&self.c1, p),
        }
    }

    pub fn norm(&self, p: &BigUint) -> BigUint {
        // a^2 - ab + b^2
        let a2 = mul(&self.c0, &self.c0, p);
        let b2 = mul(&self.c1, &self.c1, p);
        let ab = mul(&self.c0, &self.c1, p);
        sub(&add(&a2, &b2, p), &ab, p)
    }

    pub fn inverse(&self, p: &BigUint) -> Option<Fp2> {
        let n_inv = inv(&self.norm(p), p)?;
        let conj = self.conjugate(p);
        Some(Fp2 {
            c0: mul(&conj.c0, &n_inv, p),
            c1: mul(&conj.c1, &n_inv, p),
        })
    }

    pub fn pow(&self, e: &BigUint, p: &BigUint) -> Fp2 {
        let mut acc = Fp2::one();
        for i in (0..e.bits()).rev() {
            acc = acc.square(p);
            if e.bit(i) {
                acc = acc.mul(self, p);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> BigUint {
        BigUint::from(227u32)
    }

    fn fp2(a: u32, b: u32) -> Fp2 {
        Fp2 {
            c0: BigUint::from(a),
            c1: BigUint::from(b),
        }
    }

    #[test]
    fn omega_is_a_primitive_cube_root() {
        let w = fp2(0, 1);
        let w2 = w.square(&p());
        assert!(!w2.is_one());
        assert!(w2.mul(&w, &p()).is_one());
        // 1 + w + w^2 = 0
        let sum = Fp2 {
            c0: add(&BigUint::one(), &w2.c0, &p()),
            c1: add(&w.c1, &w2.c1, &p()),
        };
        assert!(sum.is_zero());
    }

    #[test]
    fn inverse_and_frobenius() {
        let p = p();
        for (a, b) in [(1, 2), (226, 3), (0, 5), (17, 0)] {
            let x = fp2(a, b);
            assert!(x.mul(&x.inverse(&p).unwrap(), &p).is_one());
            assert_eq!(x.pow(&p, &p), x.conjugate(&p));
        }
        assert!(Fp2::from_base(BigUint::zero()).inverse(&p).is_none());
    }

    #[test]
    fn cube_roots() {
        let p = p();
        for a in 0u32..227 {
            let a = BigUint::from(a);
            let r = cube_root(&a, &p);
            assert_eq!(r.modpow(&BigUint::from(3u32), &p), a);
        }
    }
}
