use super::*;
use crate::protocols::Algorithm;
use crate::types::{MessageKind, MsgValue};

fn world(alg: Algorithm, n: usize) -> WorldConfig {
    WorldConfig::new(ProtocolConfig::new(alg, n).unwrap().with_presets(true))
}

fn all(v: u8, n: usize) -> Vec<BinValue> {
    vec![BinValue::from_bit(v); n]
}

#[test]
fn transmit_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let e = Envelope::new(ProcessId(1), 0, 1, MessageKind::Auxm, Some(MsgValue::bin(BinValue::One)));
    let lat = LatencyModel::Constant { ms: 10.0 };
    let t = transmit(&e, ProcessId(1), ProcessId(0), ms_to_ns(5.0), &lat, &Scheduler::Fifo, &mut rng);
    assert_eq!(t, ms_to_ns(15.0));
    let adv: Scheduler = "adversary:1:AUXM:100".parse().unwrap();
    let t = transmit(&e, ProcessId(1), ProcessId(0), ms_to_ns(5.0), &lat, &adv, &mut rng);
    assert_eq!(t, ms_to_ns(115.0));
}

#[test]
fn ns2_unanimous_round_one() {
    let w = World::new(world(Algorithm::NS2, 4)).unwrap();
    let out = w.run_instance(0, &all(1, 4)).unwrap();
    for o in out.correct() {
        let d = o.decision.unwrap();
        assert_eq!((d.value, d.round), (BinValue::One, 1));
        assert_eq!(o.broadcasts_to_decision, 5);
    }
}

#[test]
fn self_sends_not_counted() {
    let w = World::new(world(Algorithm::S1, 4)).unwrap();
    let out = w.run_instance(0, &all(1, 4)).unwrap();
    for o in out.correct() {
        // AUXM(0), AUXM(1), PoD to three peers each
        assert_eq!(o.messages_sent, 9);
    }
}

#[test]
fn mute_fault_tolerated() {
    for alg in Algorithm::ALL {
        let w = World::new(world(alg, 4).with_faults(1, Behavior::M)).unwrap();
        let out = w.run_instance(3, &[BinValue::One, BinValue::Zero, BinValue::One, BinValue::Zero]).unwrap();
        out.check_safety().unwrap();
        assert!(out.correct().all(|o| o.decision.is_some()), "{alg}");
    }
}

#[test]
fn traces_are_reproducible() {
    let mut cfg = world(Algorithm::NS3, 7).with_faults(2, Behavior::B);
    cfg.scheduler = Scheduler::random(99);
    cfg.latency = "uniform:0.5:3:7".parse().unwrap();
    let w = World::new(cfg).unwrap();
    let props: Vec<BinValue> = (0..7).map(|i| BinValue::from_bit(i % 2)).collect();
    let run = || {
        let mut buf = Vec::new();
        w.run_traced(5, &props, Some(&mut buf)).unwrap();
        buf
    };
    let a = run();
    assert!(!a.is_empty());
    assert_eq!(a, run());
    let first: TraceRecord = serde_json::from_slice(a.split(|b| *b == b'\n').next().unwrap()).unwrap();
    assert_eq!(first.instance, 5);
}

#[test]
fn too_many_faults_rejected() {
    assert!(World::new(world(Algorithm::S1, 4).with_faults(2, Behavior::M)).is_err());
}

#[test]
fn equivocation_needs_proofs_for_signed() {
    let mut cfg = world(Algorithm::S2, 4).with_faults(1, Behavior::F);
    cfg.protocol = cfg.protocol.with_include_proofs(false);
    assert!(World::new(cfg).is_err());
}

#[test]
fn cpu_model_advances_time() {
    let mut cfg = world(Algorithm::S1, 4);
    let fast = World::new(cfg.clone()).unwrap().run_instance(0, &all(1, 4)).unwrap();
    cfg.cpu_model = true;
    let slow = World::new(cfg).unwrap().run_instance(0, &all(1, 4)).unwrap();
    let t = |o: &InstanceOutcome| o.nodes[0].decision.unwrap().vtime_ns;
    assert!(t(&slow) > t(&fast));
}

#[test]
fn echo_coin_reveals_after_quorum_requests() {
    let mut cfg = WorldConfig::new(
        ProtocolConfig::new(Algorithm::NS1, 4)
            .unwrap()
            .with_coin_scheme(crate::coins::CoinScheme::Tce),
    );
    for seed in 0..30 {
        cfg.scheduler = Scheduler::random(seed);
        let w = World::new(cfg.clone()).unwrap();
        let props: Vec<BinValue> = (0..4).map(|i| BinValue::from_bit((seed as u8 >> i) & 1)).collect();
        let out = w.run_instance(seed, &props).unwrap();
        out.check_safety().unwrap();
        for a in &out.coin_audit {
            assert!(a.requesters >= 3, "{a:?}");
        }
    }
}
