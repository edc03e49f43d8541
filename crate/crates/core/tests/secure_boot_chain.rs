use std::collections::BTreeSet;

use ibetrust::secure_boot::{
    boot, default_images, overall_integrity, BootChain, BootOutcome, DEFAULT_TRUST_OFFSET,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

fn hex_sha(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[test]
fn every_tamper_pattern_matches_boolean_product() {
    let pristine = default_images(9, 4);
    let references: Vec<String> = pristine[1..].iter().map(|i| hex_sha(i)).collect();
    for pattern in 0u8..8 {
        let mut chain = BootChain::provision(pristine.clone(), DEFAULT_TRUST_OFFSET).unwrap();
        for bit in 0..3 {
            if pattern & (1 << bit) != 0 {
                chain.tamper(bit + 2, 17 * (bit + 1)).unwrap();
            }
        }
        // independent evaluation: one integrity bit per measured level
        let bits: Vec<bool> = (2..=4)
            .map(|level| hex_sha(&chain.image(level).unwrap().bytes) == references[level - 2])
            .collect();
        let expected_ok = bits.iter().all(|b| *b);
        assert_eq!(overall_integrity(&bits), expected_ok);
        let report = boot(&chain);
        match report.outcome {
            BootOutcome::Booted { ref trust_value } => {
                assert!(expected_ok, "pattern {pattern:03b}");
                let digest = hex_sha(&pristine[1]);
                assert_eq!(trust_value.as_str(), &digest[DEFAULT_TRUST_OFFSET..DEFAULT_TRUST_OFFSET + 8]);
            }
            BootOutcome::Halted { failed_level } => {
                assert!(!expected_ok, "pattern {pattern:03b}");
                let first_bad = bits.iter().position(|b| !b).unwrap() + 2;
                assert_eq!(failed_level, first_bad);
                // nothing after the failing level is measured
                assert_eq!(report.measurements.len(), first_bad);
            }
        }
    }
}

#[test]
fn identical_chains_give_identical_trust_values() {
    let chain = BootChain::provision(default_images(3, 3), DEFAULT_TRUST_OFFSET).unwrap();
    let values: BTreeSet<String> = (0..10)
        .map(|_| boot(&chain).trust_value().unwrap().as_str().to_string())
        .collect();
    assert_eq!(values.len(), 1);
    let v = values.into_iter().next().unwrap();
    assert_eq!(v.len(), 8);
    assert!(v.chars().all(|c| c.is_ascii_hexdigit()));
}

/// Seed for the random firmware images below.
const IMAGE_SEED: u64 = 20_261_016;

#[test]
fn random_images_give_distinct_trust_values() {
    let mut rng = ChaCha20Rng::seed_from_u64(IMAGE_SEED);
    let mut values = BTreeSet::new();
    for _ in 0..1000 {
        let mut images = default_images(1, 3);
        let mut bl2 = vec![0u8; 64];
        rng.fill_bytes(&mut bl2);
        images[1] = bl2;
        let chain = BootChain::provision(images, DEFAULT_TRUST_OFFSET).unwrap();
        values.insert(boot(&chain).trust_value().unwrap().clone());
    }
    assert_eq!(values.len(), 1000);
}

#[test]
fn trust_value_depends_on_offset() {
    let images = default_images(5, 3);
    let digest = hex_sha(&images[1]);
    for offset in [0, 8, 24, 56] {
        let chain = BootChain::provision(images.clone(), offset).unwrap();
        assert_eq!(boot(&chain).trust_value().unwrap().as_str(), &digest[offset..offset + 8]);
    }
    assert!(BootChain::provision(images, 57).is_err());
}
