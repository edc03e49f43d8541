use std::fmt;
use std::str::FromStr;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::curve::{Curve, G1Point};
use super::IbeError;

/// Toy profile: p = 227, q = 19. Small enough to enumerate every point.
pub const TOY_P: u32 = 227;
pub const TOY_Q: u32 = 19;

/// Demo profile: a 256-bit p = 12kq - 1 with a 160-bit prime q.
pub const DEMO_P_HEX: &str = "8000000000000000000003de6b6acd676a1671ef6c49aafe094ccc42882657df";
pub const DEMO_Q_HEX: &str = "ef3d88f7f4b1b64633be40f5515c61236c88c537";

pub const DEFAULT_BLOCK_BITS: u32 = 128;

/// Names of the hash constructions, stored alongside the parameters.
pub const HASH_SUITE: [&str; 4] = [
    "H1:sha256-maptopoint",
    "H2:sha256-gt-trunc",
    "H3:sha256-modq",
    "H4:sha256-trunc",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Toy,
    Demo,
    Custom,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Toy => "toy",
            Profile::Demo => "demo",
            Profile::Custom => "custom",
        })
    }
}

impl FromStr for Profile {
    type Err = IbeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "toy" => Ok(Profile::Toy),
            "demo" => Ok(Profile::Demo),
            other => Err(IbeError::InvalidConfig(format!("unknown profile `{other}`"))),
        }
    }
}

/// Inputs to [`setup`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecurityConfig {
    pub profile: Profile,
    pub p: BigUint,
    pub q: BigUint,
    pub block_bits: u32,
    pub seed: u64,
}

impl SecurityConfig {
    pub fn toy(seed: u64) -> Self {
        SecurityConfig {
            profile: Profile::Toy,
            p: BigUint::from(TOY_P),
            q: BigUint::from(TOY_Q),
            block_bits: DEFAULT_BLOCK_BITS,
            seed,
        }
    }

    pub fn demo(seed: u64) -> Self {
        SecurityConfig {
            profile: Profile::Demo,
            p: BigUint::parse_bytes(DEMO_P_HEX.as_bytes(), 16).expect("demo p"),
            q: BigUint::parse_bytes(DEMO_Q_HEX.as_bytes(), 16).expect("demo q"),
            block_bits: DEFAULT_BLOCK_BITS,
            seed,
        }
    }

    pub fn for_profile(profile: Profile, seed: u64) -> Self {
        match profile {
            Profile::Toy => Self::toy(seed),
            Profile::Demo | Profile::Custom => Self::demo(seed),
        }
    }

    pub fn custom(p: BigUint, q: BigUint, block_bits: u32, seed: u64) -> Self {
        SecurityConfig {
            profile: Profile::Custom,
            p,
            q,
            block_bits,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), IbeError> {
        validate_group(&self.p, &self.q, self.block_bits)
    }
}

fn validate_group(p: &BigUint, q: &BigUint, block_bits: u32) -> Result<(), IbeError> {
    let three = BigUint::from(3u32);
    if p % &three != BigUint::from(2u32) {
        return Err(IbeError::InvalidConfig("p not ≡ 2 mod 3".into()));
    }
    if !is_probable_prime(p) {
        return Err(IbeError::InvalidConfig("p is not prime".into()));
    }
    if !is_probable_prime(q) {
        return Err(IbeError::InvalidConfig("q is not prime".into()));
    }
    if q == p {
        return Err(IbeError::InvalidConfig("q must differ from p".into()));
    }
    if !(p + 1u32).is_multiple_of(q) {
        return Err(IbeError::InvalidConfig("q does not divide p + 1".into()));
    }
    if block_bits == 0 || block_bits > 256 || !block_bits.is_multiple_of(8) {
        return Err(IbeError::InvalidConfig(format!(
            "block size {block_bits} bits must be a positive multiple of 8 no larger than 256"
        )));
    }
    Ok(())
}

/// Miller-Rabin with fixed bases followed by seeded random bases.
pub fn is_probable_prime(n: &BigUint) -> bool {
    const SMALL: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < &BigUint::from(2u32) {
        return false;
    }
    for s in SMALL {
        let s = BigUint::from(s);
        if n == &s {
            return true;
        }
        if (n % &s).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let mut d = n_minus_1.clone();
    let mut r = 0u32;
    while d.is_even() {
        d >>= 1u32;
        r += 1;
    }
    let witness = |a: &BigUint| -> bool {
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            return false;
        }
        for _ in 1..r {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                return false;
            }
        }
        true
    };
    if SMALL.iter().any(|a| witness(&BigUint::from(*a))) {
        return false;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(0x05ee_d0f9_a11e);
    let two = BigUint::from(2u32);
    for _ in 0..16 {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        if witness(&a) {
            return false;
        }
    }
    true
}

/// The base station's master secret s in Z_q*.
#[derive(Clone, PartialEq, Eq)]
pub struct MasterKey {
    s: BigUint,
}

impl MasterKey {
    pub fn new(s: BigUint, q: &BigUint) -> Result<Self, IbeError> {
        if s.is_zero() || &s >= q {
            return Err(IbeError::InvalidConfig("master key must lie in [1, q-1]".into()));
        }
        Ok(MasterKey { s })
    }

    pub fn scalar(&self) -> &BigUint {
        &self.s
    }
}

impl fmt::Debug for MasterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MasterKey(..)")
    }
}

/// Public system parameters shared with every node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicParams {
    pub(crate) profile: Profile,
    pub(crate) curve: Curve,
    pub(crate) q: BigUint,
    pub(crate) cofactor: BigUint,
    pub(crate) generator: G1Point,
    pub(crate) public_key: G1Point,
    pub(crate) block_bits: u32,
}

impl PublicParams {
    /// Builds parameters from an explicit generator and sP, checking every
    /// group invariant.
    pub fn from_parts(
        profile: Profile,
        p: BigUint,
        q: BigUint,
        block_bits: u32,
        generator: G1Point,
        public_key: G1Point,
    ) -> Result<Self, IbeError> {
        validate_group(&p, &q, block_bits)?;
        let curve = Curve::new(p.clone());
        let cofactor = (&p + 1u32) / &q;
        for pt in [&generator, &public_key] {
            if !curve.contains(pt) {
                return Err(IbeError::NotOnCurve);
            }
            if pt.is_infinity() || !curve.mul(&q, pt).is_infinity() {
                return Err(IbeError::InvalidConfig("point does not have order q".into()));
            }
        }
        Ok(PublicParams {
            profile,
            curve,
            q,
            cofactor,
            generator,
            public_key,
            block_bits,
        })
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn p(&self) -> &BigUint {
        self.curve.modulus()
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn cofactor(&self) -> &BigUint {
        &self.cofactor
    }

    pub fn generator(&self) -> &G1Point {
        &self.generator
    }

    /// sP.
    pub fn public_key(&self) -> &G1Point {
        &self.public_key
    }

    pub fn block_bits(&self) -> u32 {
        self.block_bits
    }

    /// Message block size n/8 in bytes.
    pub fn block_len(&self) -> usize {
        (self.block_bits / 8) as usize
    }

    /// Encoded length of one G1 point (64 bytes for the demo profile).
    pub fn point_len(&self) -> usize {
        2 * self.curve.coord_len()
    }

    /// Uniform element of Z_q*.
    pub fn random_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> BigUint {
        rng.gen_biguint_range(&BigUint::one(), &self.q)
    }

    pub fn is_order_q(&self, pt: &G1Point) -> bool {
        !pt.is_infinity() && self.curve.contains(pt) && self.curve.mul(&self.q, pt).is_infinity()
    }
}

/// Generates public parameters and the master key, deterministically from
/// the config seed.
pub fn setup(config: &SecurityConfig) -> Result<(PublicParams, MasterKey), IbeError> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let curve = Curve::new(config.p.clone());
    let cofactor = (&config.p + 1u32) / &config.q;
    let generator = loop {
        let y = rng.gen_biguint_below(&config.p);
        let candidate = curve.mul(&cofactor, &curve.point_from_y(&y));
        if !candidate.is_infinity() {
            break candidate;
        }
    };
    let s = rng.gen_biguint_range(&BigUint::one(), &config.q);
    setup_with(config, generator, s)
}

/// Parameters for a fixed generator and master scalar.
pub fn setup_with(
    config: &SecurityConfig,
    generator: G1Point,
    s: BigUint,
) -> Result<(PublicParams, MasterKey), IbeError> {
    config.validate()?;
    let master = MasterKey::new(s, &config.q)?;
    let curve = Curve::new(config.p.clone());
    let public_key = curve.mul(master.scalar(), &generator);
    let params = PublicParams::from_parts(
        config.profile,
        config.p.clone(),
        config.q.clone(),
        config.block_bits,
        generator,
        public_key,
    )?;
    Ok((params, master))
}
