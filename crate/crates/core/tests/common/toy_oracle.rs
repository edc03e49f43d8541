//! Independent toy-curve arithmetic on machine integers (p = 227, q = 19).
//!
//! Nothing here touches the library's field, curve or pairing code. The
//! pairing is a naive Miller loop that walks A, 2A, ..., (q-1)A one addition
//! at a time.

#![allow(dead_code)]

pub const P: i64 = 227;
pub const Q: i64 = 19;

pub type Pt = Option<(i64, i64)>;

fn m(a: i64) -> i64 {
    a.rem_euclid(P)
}

fn inv(a: i64) -> i64 {
    pow_mod(m(a), P - 2)
}

fn pow_mod(mut b: i64, mut e: i64) -> i64 {
    let mut r = 1;
    b = m(b);
    while e > 0 {
        if e & 1 == 1 {
            r = m(r * b);
        }
        b = m(b * b);
        e >>= 1;
    }
    r
}

pub fn add(a: Pt, b: Pt) -> Pt {
    let (Some((x1, y1)), Some((x2, y2))) = (a, b) else {
        return a.or(b);
    };
    if x1 == x2 && m(y1 + y2) == 0 {
        return None;
    }
    let lam = if a == b {
        m(3 * x1 * x1 * inv(2 * y1))
    } else {
        m((y2 - y1) * inv(x2 - x1))
    };
    let x3 = m(lam * lam - x1 - x2);
    Some((x3, m(lam * (x1 - x3) - y1)))
}

pub fn mul(k: i64, pt: Pt) -> Pt {
    (0..k).fold(None, |acc, _| add(acc, pt))
}

pub fn on_curve(pt: Pt) -> bool {
    match pt {
        None => true,
        Some((x, y)) => m(y * y - x * x * x - 1) == 0,
    }
}

// F_{p^2} as a + b w, w^2 + w + 1 = 0
pub type F2 = (i64, i64);

fn f2mul(u: F2, v: F2) -> F2 {
    let (a, b) = u;
    let (c, d) = v;
    (m(a * c - b * d), m(a * d + b * c - b * d))
}

fn f2inv(u: F2) -> F2 {
    let (a, b) = u;
    let n = inv(m(a * a - a * b + b * b));
    (m((a - b) * n), m(-b * n))
}

pub fn f2pow(u: F2, e: i64) -> F2 {
    (0..e).fold((1, 0), |acc, _| f2mul(acc, u))
}

pub fn tate(a: Pt, b: Pt) -> F2 {
    let (Some(ap), Some((xb, yb))) = (a, b) else {
        return (1, 0);
    };
    let xq: F2 = (0, xb);
    let yq: F2 = (yb, 0);
    let (mut num, mut den): (F2, F2) = ((1, 0), (1, 0));
    let mut t = a;
    for _ in 0..Q - 1 {
        let (x1, y1) = t.unwrap();
        let next = add(t, a);
        let line = match next {
            None => (m(xq.0 - x1), xq.1),
            Some((x3, _)) => {
                let lam = if t == a {
                    m(3 * x1 * x1 * inv(2 * y1))
                } else {
                    m((ap.1 - y1) * inv(ap.0 - x1))
                };
                den = f2mul(den, (m(xq.0 - x3), xq.1));
                (m(yq.0 - y1 - lam * (xq.0 - x1)), m(-lam * xq.1))
            }
        };
        num = f2mul(num, line);
        t = next;
    }
    f2pow(f2mul(num, f2inv(den)), (P * P - 1) / Q)
}

/// Every point of order dividing q, generated from a known generator.
pub fn subgroup(gen: Pt) -> Vec<Pt> {
    (0..Q).map(|k| mul(k, gen)).collect()
}
