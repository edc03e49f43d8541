use ibetrust::ake::{exchange_hash, initiate, initiate_with_scalar, initiator_secret, respond, responder_secret, AkeError};
use ibetrust::ibe::{extract, hash_to_point, setup, PrivateKey, PublicParams, SecurityConfig};
use ibetrust::NodeId;
use num_bigint::BigUint;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn keys(config: &SecurityConfig, a: NodeId, b: NodeId) -> (PublicParams, PrivateKey, PrivateKey) {
    let (params, master) = setup(config).unwrap();
    let ka = extract(&params, &master, &a.identity()).unwrap();
    let kb = extract(&params, &master, &b.identity()).unwrap();
    (params, ka, kb)
}

fn agreement(config: SecurityConfig, runs: usize, seed: u64) {
    let (a, b) = (NodeId(1), NodeId(2));
    let (params, ka, kb) = keys(&config, a, b);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..runs {
        let nonce = rng.gen();
        let (msg, key_a) = initiate(&params, &ka, a, b, nonce, &mut rng).unwrap();
        let key_b = respond(&params, &kb, &msg).unwrap();
        assert_eq!(key_a.bytes(), key_b.bytes());
    }
}

#[test]
fn honest_runs_agree_toy() {
    for seed in 0..5 {
        agreement(SecurityConfig::toy(seed), 100, seed);
    }
}

#[test]
fn honest_runs_agree_demo() {
    agreement(SecurityConfig::demo(3), 20, 3);
}

#[test]
fn gt_values_match_directly() {
    let (a, b) = (NodeId(4), NodeId(9));
    for config in [SecurityConfig::toy(8), SecurityConfig::demo(8)] {
        let (params, ka, kb) = keys(&config, a, b);
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        for _ in 0..10 {
            let r = params.random_scalar(&mut rng);
            let Ok((r_point, k_ab)) = initiator_secret(&params, &ka, b, &r) else { continue };
            let (msg, _) = initiate_with_scalar(&params, &ka, a, b, 0, &r).unwrap();
            assert_eq!(msg.r_point, r_point);
            assert_eq!(k_ab, responder_secret(&params, &kb, &msg).unwrap());
        }
    }
}

#[test]
fn degenerate_scalar_is_rejected() {
    // search the toy group for an (r, peer) with r + h = 0 mod q
    let a = NodeId(1);
    let (params, master) = setup(&SecurityConfig::toy(2)).unwrap();
    let ka = extract(&params, &master, &a.identity()).unwrap();
    let q = params.q().clone();
    let q_a = hash_to_point(&params, &a.identity()).unwrap();
    let mut found = 0;
    for peer in 2..40 {
        let b = NodeId(peer);
        let mut r = BigUint::from(1u32);
        while r < q {
            let r_point = params.curve().mul(&r, &q_a);
            let h = exchange_hash(&params, &r_point, &a.identity(), &b.identity());
            let result = initiate_with_scalar(&params, &ka, a, b, 0, &r);
            if ((&r + &h) % &q).is_zero() {
                assert_eq!(result.unwrap_err(), AkeError::Degenerate);
                found += 1;
            } else {
                assert!(!matches!(result, Err(AkeError::Degenerate)));
            }
            r += 1u32;
        }
    }
    assert!(found > 0, "no degenerate r found");
}

#[test]
fn other_identity_cannot_respond() {
    let (a, b) = (NodeId(1), NodeId(2));
    let (params, ka, _) = keys(&SecurityConfig::toy(5), a, b);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let (msg, _) = initiate(&params, &ka, a, b, 1, &mut rng).unwrap();
    assert!(matches!(respond(&params, &ka, &msg), Err(AkeError::WrongParty { .. })));
}
