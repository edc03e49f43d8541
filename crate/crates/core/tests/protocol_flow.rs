use ibetrust::energy::{Category, EnergyConstants, Process};
use ibetrust::ibe::{pairing_invocations, setup, SecurityConfig};
use ibetrust::protocol::{
    decode_payload, encode_payload, fragment, reassemble, BaseStation, Envelope, Frame, FrameKind, Phase,
    ProtocolError, RejectReason, SensorNode, Status,
};
use ibetrust::secure_boot::{default_images, BootChain, DEFAULT_TRUST_OFFSET};
use ibetrust::NodeId;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn network(n: u16) -> (BaseStation, Vec<SensorNode>) {
    let (params, master) = setup(&SecurityConfig::toy(11)).unwrap();
    let mut bs = BaseStation::new(params, master, 1).unwrap();
    let nodes = (1..=n)
        .map(|i| {
            let id = NodeId(i);
            let secrets = bs.dp_provision(id).unwrap();
            let chain = BootChain::provision(default_images(i, 3), DEFAULT_TRUST_OFFSET).unwrap();
            let mut node = SensorNode::new(id, secrets, chain, EnergyConstants::default(), 100 + i as u64);
            bs.pdp_register(&mut node).unwrap();
            node
        })
        .collect();
    (bs, nodes)
}

fn joined(frames: &[Frame]) -> Vec<u8> {
    reassemble(frames).unwrap()
}

fn authenticate(bs: &mut BaseStation, node: &mut SensorNode, t: u64) -> Vec<Frame> {
    node.boot(t);
    let req = node.ta_request(t).unwrap();
    let ok = bs.handle_ta(node.id(), &joined(&req)).unwrap();
    node.handle_ack(t + 1, &joined(&ok.ack)).unwrap();
    req
}

#[test]
fn provisioning_rules() {
    let (mut bs, nodes) = network(2);
    assert_eq!(bs.roster().len(), 2);
    assert!(matches!(bs.dp_provision(NodeId(1)), Err(ProtocolError::DuplicateId(_))));
    let secrets = bs.dp_provision(NodeId(3)).unwrap();
    assert!(secrets.key.is_consistent(&secrets.params).unwrap());
    assert_eq!(bs.roster().len(), 3);
    for n in &nodes {
        assert_eq!(n.phase(), Phase::Pdp);
        assert_eq!(bs.record(n.id()).unwrap().status, Status::Registered);
    }
}

#[test]
fn registration_needs_a_clean_boot_and_overwrites() {
    let (mut bs, mut nodes) = network(1);
    let node = &mut nodes[0];
    let old = bs.record(node.id()).unwrap().trust_value.clone();
    node.chain_mut().replace_image(2, b"reflashed BL2".to_vec()).unwrap();
    // references no longer match: the node halts and cannot register
    assert!(matches!(bs.pdp_register(node), Err(ProtocolError::BootHalted(2))));
    let images = vec![node.chain().image(1).unwrap().bytes.clone(), b"reflashed BL2".to_vec(), b"bl3".to_vec()];
    *node.chain_mut() = BootChain::provision(images, DEFAULT_TRUST_OFFSET).unwrap();
    let new = bs.pdp_register(node).unwrap();
    assert_ne!(new, old);
    assert_eq!(bs.record(node.id()).unwrap().trust_value, new);
}

#[test]
fn full_lifecycle_and_trust_lists() {
    let (mut bs, mut nodes) = network(3);
    for (i, node) in nodes.iter_mut().enumerate() {
        authenticate(&mut bs, node, 10 * i as u64);
        assert_eq!(node.phase(), Phase::Trusted);
        assert!(node.trust_list().contains(&node.id()));
    }
    assert_eq!(bs.trust_list(), vec![NodeId(1), NodeId(2), NodeId(3)]);
    // node 3 saw everyone; node 1 only itself until it re-authenticates
    assert_eq!(nodes[2].trust_list().len(), 3);
    assert_eq!(nodes[0].trust_list().len(), 1);

    // one world switch for the whole authentication: out of the secure world after the ack
    let l = nodes[0].ledger();
    assert_eq!(l.units_before_trusted(Category::Switch, Process::TrustedAuth), 1);
    assert_eq!(l.units_before_trusted(Category::Encrypt, Process::TrustedAuth), 160);
    assert_eq!(l.units_before_trusted(Category::Boot, Process::Boot), 1);
}

#[test]
fn replayed_request_changes_nothing() {
    let (mut bs, mut nodes) = network(1);
    let req = authenticate(&mut bs, &mut nodes[0], 0);
    let before = bs.record(NodeId(1)).unwrap().clone();
    assert_eq!(bs.handle_ta(NodeId(1), &joined(&req)).unwrap_err(), RejectReason::NonceReplay);
    assert_eq!(bs.record(NodeId(1)).unwrap(), &before);
}

#[test]
fn replay_accepted_without_nonce_check() {
    let (mut bs, mut nodes) = network(1);
    let req = authenticate(&mut bs, &mut nodes[0], 0);
    bs.disable_nonce_check_for_testing();
    assert!(bs.handle_ta(NodeId(1), &joined(&req)).is_ok());
}

#[test]
fn rejection_reasons() {
    let (mut bs, mut nodes) = network(2);
    let params = bs.params().clone();
    let mut rng = ChaCha20Rng::seed_from_u64(5);

    // unknown id: a provisioned-but-unregistered outsider is still unknown to the trust DB
    let record = ibetrust::protocol::TaRecord::new(NodeId(77), "deadbeef".to_string().try_into().unwrap(), 1);
    let sealed = ibetrust::protocol::seal(&params, "base-station", &record.encode(), &mut rng).unwrap();
    assert_eq!(bs.handle_ta(NodeId(77), &sealed).unwrap_err(), RejectReason::UnknownId);

    // forged trust value for a registered id
    let record = ibetrust::protocol::TaRecord::new(NodeId(2), "00000000".to_string().try_into().unwrap(), 1);
    let sealed = ibetrust::protocol::seal(&params, "base-station", &record.encode(), &mut rng).unwrap();
    assert_eq!(bs.handle_ta(NodeId(2), &sealed).unwrap_err(), RejectReason::TrustValueMismatch);

    // bad inner MAC
    let mut bytes = ibetrust::protocol::TaRecord::new(NodeId(2), "00000000".to_string().try_into().unwrap(), 1).encode();
    bytes[19] ^= 1;
    let sealed = ibetrust::protocol::seal(&params, "base-station", &bytes, &mut rng).unwrap();
    assert_eq!(bs.handle_ta(NodeId(2), &sealed).unwrap_err(), RejectReason::MacMismatch);

    // ciphertext bit flip
    nodes[0].boot(0);
    let mut req = joined(&nodes[0].ta_request(0).unwrap());
    req[30] ^= 0x10;
    assert!(matches!(
        bs.handle_ta(NodeId(1), &req).unwrap_err(),
        RejectReason::DecryptFailure | RejectReason::Malformed
    ));
    assert_eq!(bs.record(NodeId(1)).unwrap().status, Status::Registered);
    assert!(bs.trust_list().is_empty());
}

#[test]
fn tampered_node_halts_before_authentication() {
    let (_, mut nodes) = network(1);
    nodes[0].chain_mut().tamper(2, 3).unwrap();
    nodes[0].boot(0);
    assert_eq!(nodes[0].phase(), Phase::Halted);
    assert!(matches!(nodes[0].ta_request(0), Err(ProtocolError::WrongPhase { .. })));
}

#[test]
fn stale_ack_is_discarded() {
    let (mut bs, mut nodes) = network(1);
    nodes[0].boot(0);
    let req = nodes[0].ta_request(0).unwrap();
    let ok = bs.handle_ta(NodeId(1), &joined(&req)).unwrap();
    nodes[0].handle_ack(1, &joined(&ok.ack)).unwrap();
    assert_eq!(nodes[0].handle_ack(2, &joined(&ok.ack)).unwrap_err(), RejectReason::StaleAck);
    // after a reboot the old ack carries the wrong nonce
    nodes[0].boot(3);
    nodes[0].ta_request(3).unwrap();
    assert_eq!(nodes[0].handle_ack(4, &joined(&ok.ack)).unwrap_err(), RejectReason::StaleAck);
    assert_eq!(nodes[0].phase(), Phase::Ta);
}

#[test]
fn termination_and_readmission() {
    let (mut bs, mut nodes) = network(2);
    authenticate(&mut bs, &mut nodes[0], 0);
    authenticate(&mut bs, &mut nodes[1], 5);
    assert_eq!(bs.trust_list().len(), 2);
    assert!(bs.terminate(NodeId(1)));
    assert!(!bs.terminate(NodeId(9)));
    nodes[0].terminate();
    assert_eq!(bs.trust_list(), vec![NodeId(2)]);
    assert!(matches!(nodes[0].initiate_ake(6, NodeId(2)), Err(ProtocolError::WrongPhase { .. })));
    authenticate(&mut bs, &mut nodes[0], 10);
    assert_eq!(nodes[0].phase(), Phase::Trusted);
    assert_eq!(bs.trust_list().len(), 2);
}

#[test]
fn peer_key_exchange_two_tiers() {
    let (mut bs, mut nodes) = network(3);
    authenticate(&mut bs, &mut nodes[0], 0);
    authenticate(&mut bs, &mut nodes[1], 2);
    // node 2 knows node 1; node 1 does not yet know node 2, so re-run its TA
    authenticate(&mut bs, &mut nodes[0], 4);
    let (a, rest) = nodes.split_at_mut(1);
    let (a, b) = (&mut a[0], &mut rest[0]);

    let frames = a.initiate_ake(10, NodeId(2)).unwrap();
    assert_eq!(frames.len(), 1);
    let ka = a.session_with(NodeId(2)).unwrap().key.clone();
    let kb = b.peer_authenticate(11, NodeId(1), &frames[0].payload).unwrap();
    assert_eq!(ka, kb);

    let probe = a.probe(NodeId(2)).unwrap().unwrap();
    b.check_probe(NodeId(1), &probe[0].payload).unwrap();
    assert!(b.session_with(NodeId(1)).unwrap().confirmed);

    // replay of the same key-exchange message
    assert_eq!(
        b.peer_authenticate(12, NodeId(1), &frames[0].payload).unwrap_err(),
        RejectReason::NonceReplay
    );

    // tier 1: an unlisted sender is refused before any pairing runs
    let payload = encode_payload(NodeId(3), 5, &[1, 2]).unwrap();
    let before = pairing_invocations();
    let pairing_energy = b.ledger().category_total(Category::Pairing);
    assert_eq!(
        b.peer_authenticate(13, NodeId(3), &payload).unwrap_err(),
        RejectReason::NotInTrustList
    );
    assert_eq!(pairing_invocations(), before);
    assert_eq!(b.ledger().category_total(Category::Pairing), pairing_energy);

    // initiator bills transmit only, responder receive only
    let a_l = a.ledger();
    assert!(a_l.process_units(Category::Tx, Process::KeyExchange) > 0);
    assert_eq!(a_l.process_units(Category::Rx, Process::KeyExchange), 0);
    assert_eq!(a_l.process_units(Category::Switch, Process::KeyExchange), 2);
}

#[test]
fn ake_message_size_on_demo_profile() {
    let params = setup(&SecurityConfig::demo(1)).unwrap().0;
    assert_eq!(params.point_len(), 64);
    let payload = encode_payload(NodeId(1), 0, &vec![0u8; params.point_len()]).unwrap();
    let frames = fragment(
        Envelope {
            kind: FrameKind::Ake,
            src: NodeId(1),
            dst: NodeId(2),
            msg_id: 0,
        },
        0,
        &payload,
    )
    .unwrap();
    assert_eq!(frames.len(), 1);
    assert_eq!(frames[0].len(), 93);
    assert_eq!(params.point_len() + 21, 85);
}

#[test]
fn random_bit_flips_never_accepted() {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let mut false_accepts = 0;
    for _ in 0..100_000 {
        let len = rng.gen_range(0..=98);
        let msg: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let p = encode_payload(NodeId(rng.gen()), rng.gen(), &msg).unwrap();
        let bit = rng.gen_range(0..p.len() * 8);
        let mut q = p.clone();
        q[bit / 8] ^= 1 << (bit % 8);
        if decode_payload(&q).is_ok() {
            false_accepts += 1;
        }
    }
    assert_eq!(false_accepts, 0);
}

#[test]
fn fragmentation_roundtrip_all_lengths() {
    for len in 0..=1000usize {
        let data: Vec<u8> = (0..len).map(|i| (i * 7) as u8).collect();
        let env = Envelope {
            kind: FrameKind::TaAck,
            src: NodeId(0),
            dst: NodeId(4),
            msg_id: len as u16,
        };
        let frames = fragment(env, 0, &data).unwrap();
        assert_eq!(frames.len(), len.div_ceil(106).max(1));
        for f in &frames[..frames.len() - 1] {
            assert_eq!(f.payload.len(), 106);
        }
        for w in frames.windows(2) {
            assert_eq!(w[1].header.seq, w[0].header.seq + 1);
        }
        let decoded: Vec<Frame> = frames.iter().map(|f| Frame::decode(&f.encode().unwrap()).unwrap()).collect();
        assert_eq!(reassemble(&decoded).unwrap(), data);
    }
}

proptest! {
    #[test]
    fn payload_roundtrip(sender in any::<u16>(), nonce in any::<u16>(), msg in proptest::collection::vec(any::<u8>(), 0..=98)) {
        let p = encode_payload(NodeId(sender), nonce, &msg).unwrap();
        let d = decode_payload(&p).unwrap();
        prop_assert_eq!(d.sender, NodeId(sender));
        prop_assert_eq!(d.nonce, nonce);
        prop_assert_eq!(d.message, msg);
    }

    #[test]
    fn frame_roundtrip(seq in any::<u16>(), dst in any::<u16>(), src in any::<u16>(), id in any::<u16>(), body in proptest::collection::vec(any::<u8>(), 0..=106)) {
        let env = Envelope { kind: FrameKind::Ake, src: NodeId(src), dst: NodeId(dst), msg_id: id };
        let f = fragment(env, seq, &body).unwrap().remove(0);
        let bytes = f.encode().unwrap();
        prop_assert!(bytes.len() <= 127);
        prop_assert_eq!(Frame::decode(&bytes).unwrap(), f);
    }
}
