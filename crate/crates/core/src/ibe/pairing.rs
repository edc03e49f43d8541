//! Modified Tate pairing on y^2 = x^3 + 1.
//!
//! e(A, B) = f_{q,A}(phi(B))^((p^2 - 1) / q), where phi(x, y) = (w x, y) is
//! the distortion map and f_{q,A} is evaluated with Miller's double-and-add
//! loop. The x coordinate of phi(B) is not in F_p, so vertical-line
//! denominators are kept and inverted once at the end.

use std::cell::Cell;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::curve::{write_fixed, Curve, G1Point};
use super::field::Fp2;
use super::IbeError;

thread_local! {
    static PAIRINGS: Cell<u64> = const { Cell::new(0) };
}

/// Number of pairings evaluated on the current thread.
pub fn pairing_invocations() -> u64 {
    PAIRINGS.with(|c| c.get())
}

/// Element of the order-q subgroup of F_{p^2}*, stored as `c0 + c1*w`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GtElement {
    c0: BigUint,
    c1: BigUint,
}

impl GtElement {
    pub fn one() -> Self {
        Fp2::one().into()
    }

    pub fn is_one(&self) -> bool {
        self.as_fp2().is_one()
    }

    pub fn coefficients(&self) -> (&BigUint, &BigUint) {
        (&self.c0, &self.c1)
    }

    fn as_fp2(&self) -> Fp2 {
        Fp2 {
            c0: self.c0.clone(),
            c1: self.c1.clone(),
        }
    }

    pub fn mul(&self, other: &GtElement, p: &BigUint) -> GtElement {
        self.as_fp2().mul(&other.as_fp2(), p).into()
    }

    pub fn pow(&self, e: &BigUint, p: &BigUint) -> GtElement {
        self.as_fp2().pow(e, p).into()
    }

    /// Canonical encoding: c0 || c1, each big-endian and as wide as p.
    pub fn encode(&self, curve: &Curve) -> Vec<u8> {
        let len = curve.coord_len();
        let mut out = vec![0u8; 2 * len];
        write_fixed(&mut out[..len], &self.c0);
        write_fixed(&mut out[len..], &self.c1);
        out
    }
}

impl From<Fp2> for GtElement {
    fn from(v: Fp2) -> Self {
        GtElement { c0: v.c0, c1: v.c1 }
    }
}

/// Value at phi(Q) of the line through `t` and `a` (tangent if equal).
fn line_at(curve: &Curve, t: &G1Point, a: &G1Point, xq: &Fp2, yq: &Fp2) -> Fp2 {
    let p = curve.modulus();
    let (Some(pt), Some(pa)) = (t.coords(), a.coords()) else {
        return Fp2::one();
    };
    match curve.slope(pt, pa) {
        // vertical line x = x_T
        None => xq.sub(&Fp2::from_base(pt.0.clone()), p),
        Some(lambda) => {
            // y_Q - y_T - lambda (x_Q - x_T)
            let dx = xq.sub(&Fp2::from_base(pt.0.clone()), p);
            let scaled = dx.mul(&Fp2::from_base(lambda), p);
            yq.sub(&Fp2::from_base(pt.1.clone()), p).sub(&scaled, p)
        }
    }
}

fn vertical_at(curve: &Curve, t: &G1Point, xq: &Fp2) -> Fp2 {
    match t.coords() {
        None => Fp2::one(),
        Some((x, _)) => xq.sub(&Fp2::from_base(x.clone()), curve.modulus()),
    }
}

/// Computes e(a, b). Either argument being infinity yields the identity.
pub fn pairing(curve: &Curve, q: &BigUint, a: &G1Point, b: &G1Point) -> Result<GtElement, IbeError> {
    if !curve.contains(a) || !curve.contains(b) {
        return Err(IbeError::NotOnCurve);
    }
    PAIRINGS.with(|c| c.set(c.get() + 1));
    let Some((xb, yb)) = b.coords() else {
        return Ok(GtElement::one());
    };
    if a.is_infinity() {
        return Ok(GtElement::one());
    }
    let p = curve.modulus();
    let xq = Fp2 {
        c0: BigUint::zero(),
        c1: xb.clone(),
    };
    let yq = Fp2::from_base(yb.clone());

    let mut num = Fp2::one();
    let mut den = Fp2::one();
    let mut t = a.clone();
    for i in (0..q.bits().saturating_sub(1)).rev() {
        let line = line_at(curve, &t, &t, &xq, &yq);
        let doubled = curve.double(&t);
        num = num.square(p).mul(&line, p);
        den = den.square(p).mul(&vertical_at(curve, &doubled, &xq), p);
        t = doubled;
        if q.bit(i) {
            let line = line_at(curve, &t, a, &xq, &yq);
            let sum = curve.add(&t, a);
            num = num.mul(&line, p);
            den = den.mul(&vertical_at(curve, &sum, &xq), p);
            t = sum;
        }
    }
    if num.is_zero() || den.is_zero() {
        return Err(IbeError::DegeneratePairing);
    }
    let f = num.mul(&den.inverse(p).ok_or(IbeError::DegeneratePairing)?, p);
    // f^(p^2-1)/q = (f^(p-1))^((p+1)/q), with f^p given by conjugation
    let f_inv = f.inverse(p).ok_or(IbeError::DegeneratePairing)?;
    let unitary = f.conjugate(p).mul(&f_inv, p);
    let cofactor = (p + 1u32) / q;
    Ok(unitary.pow(&cofactor, p).into())
}
