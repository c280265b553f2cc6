//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.
//!
//! cargo test --release --test acceptance

use std::collections::BTreeMap;
use std::time::Instant;

use sha2::{Digest, Sha256};

use bincons::coins::{CoinConfig, CoinContext, CoinOutput, CoinScheme, CoinState};
use bincons::harness::{emit, gen_proposals, run_experiment, run_experiment_traced, run_grid, ExperimentConfig, FaultSpec, Format, Grid};
use bincons::netsim::{AdversaryRule, Behavior, InstanceOutcome, LatencyModel, Scheduler, TraceRecord, World, WorldConfig};
use bincons::primitives::{
    message_size, CoinImpl, CostModel, CryptoConfig, SigScheme, SignatureType, ThresholdKind, TrustedSetup,
};
use bincons::protocols::{Algorithm, ProtocolConfig};
use bincons::types::{
    thresholds, AuxValue, BinValue, Envelope, Evidence, InstanceId, MessageKind, MsgValue, ProcessId, QuorumCert,
    Round, SignedStatement, Statement, ValidityProof,
};

type Verdict = (bool, String);
type Criterion = (&'static str, fn() -> Verdict);

fn world(cfg: WorldConfig) -> World {
    World::new(cfg).expect("valid world")
}

fn fully_decided(o: &InstanceOutcome, cap: Round) -> bool {
    o.correct().all(|n| n.decision.is_some_and(|d| d.round <= cap))
}

fn safety_grid() -> Verdict {
    let mut cells = 0;
    let mut violations = 0;
    let mut undecided = 0;
    let mut worst = 0;
    for n in [4usize, 7, 16] {
        for alg in Algorithm::ALL {
            for b in Behavior::ALL {
                for p_one in [1.0 / 3.0, 0.5, 2.0 / 3.0] {
                    cells += 1;
                    let p = ProtocolConfig::new(alg, n).unwrap();
                    let t = p.params.t;
                    let mut cfg = WorldConfig::new(p).with_faults(t, b);
                    cfg.scheduler = Scheduler::random(cells);
                    let w = world(cfg);
                    for i in 0..100 {
                        match w.run_instance(i, &gen_proposals(cells, n, p_one, i)) {
                            Ok(o) => {
                                violations += o.check_safety().is_err() as usize;
                                undecided += !fully_decided(&o, 50) as usize;
                                worst = worst.max(o.max_round());
                            }
                            Err(_) => undecided += 1,
                        }
                    }
                }
            }
        }
    }
    (
        violations == 0 && undecided == 0,
        format!("{cells} cells x 100 instances: {violations} safety violations, {undecided} late or missing decisions, worst round {worst}"),
    )
}

fn unanimous(alg: Algorithm, v: BinValue) -> InstanceOutcome {
    let p = ProtocolConfig::new(alg, 4).unwrap().with_presets(true);
    let mut cfg = WorldConfig::new(p);
    cfg.latency = LatencyModel::Constant { ms: 1.0 };
    cfg.scheduler = Scheduler::Fifo;
    world(cfg).run_instance(0, &[v; 4]).unwrap()
}

fn fastest_decision() -> Verdict {
    let want = [
        (Algorithm::S1, 2),
        (Algorithm::S2, 3),
        (Algorithm::S3, 2),
        (Algorithm::NS1, 2),
        (Algorithm::NS2, 5),
        (Algorithm::NS3, 2),
    ];
    let mut ok = true;
    let mut got = Vec::new();
    for (alg, k) in want {
        let o = unanimous(alg, BinValue::One);
        let fine = o.nodes.iter().all(|n| {
            n.broadcasts_to_decision == k && n.decision.is_some_and(|d| d.round == 1 && d.value == BinValue::One)
        });
        ok &= fine;
        got.push(format!("{alg}={}", o.nodes[0].broadcasts_to_decision));
    }
    (ok, format!("broadcasts to decision {}, all in round 1", got.join(" ")))
}

fn unanimous_zero() -> Verdict {
    let mut ok = true;
    let mut got = Vec::new();
    for alg in Algorithm::ALL {
        let want = if matches!(alg, Algorithm::S2 | Algorithm::NS2) { 1 } else { 2 };
        let o = unanimous(alg, BinValue::Zero);
        ok &= o.nodes.iter().all(|n| n.decision.is_some_and(|d| d.round == want && d.value == BinValue::Zero));
        got.push(format!("{alg}={}", o.max_round()));
    }
    (ok, format!("decision rounds {}", got.join(" ")))
}

fn s1_tail() -> Verdict {
    let r = run_experiment(&ExperimentConfig {
        algorithm: Algorithm::S1,
        instances: 100,
        warmup: 0,
        ..Default::default()
    })
    .unwrap();
    let s = &r.summary;
    (
        s.round_max >= 3 && (1.5..=3.0).contains(&s.rounds),
        format!("max round {}, mean round {:.3}", s.round_max, s.rounds),
    )
}

fn byte_goldens() -> Verdict {
    let m = CostModel::default();
    let setup = TrustedSetup::new(thresholds(4).unwrap(), 1);
    let crypto = |signature, coin| CryptoConfig {
        signature,
        coin,
        coin_threshold: ThresholdKind::Large,
        encrypt_channels: signature == SignatureType::None,
    };
    let st = |kind| Statement {
        instance: 0,
        round: 1,
        kind,
        value: MsgValue::Aux(AuxValue::One),
    };
    let cert = |kind, evidence| {
        ValidityProof::Quorum(QuorumCert {
            kind,
            round: 1,
            value: AuxValue::One,
            evidence,
        })
    };
    let signer = |p| setup.signer(ProcessId(p)).unwrap();

    let aux = st(MessageKind::Auxm);
    let shares: Vec<_> = (0..3).map(|p| signer(p).sign(&aux.canonical_bytes(), SigScheme::ThreshLarge)).collect();
    let token = setup.verifier().combine(&shares, SigScheme::ThreshLarge).unwrap();
    let mut signed_aux = Envelope::new(ProcessId(0), 0, 2, MessageKind::Auxm, Some(MsgValue::Aux(AuxValue::One)));
    signed_aux.proof = Some(cert(MessageKind::Auxm, Evidence::Threshold { statement: aux, token }));

    let sval = Envelope::new(ProcessId(0), 0, 1, MessageKind::SVal, Some(MsgValue::Aux(AuxValue::Zero)));
    let share = Envelope::new(ProcessId(0), 0, 1, MessageKind::CoinShare, None);

    let pv = st(MessageKind::PreVote);
    let entries = (0..3)
        .map(|p| SignedStatement {
            statement: pv,
            sig: signer(p).sign(&pv.canonical_bytes(), SigScheme::Plain),
        })
        .collect();
    let mut eddsa = Envelope::new(ProcessId(0), 0, 2, MessageKind::PreVote, Some(MsgValue::Aux(AuxValue::One)));
    eddsa.proof = Some(cert(MessageKind::PreVote, Evidence::SigSet { entries }));

    let got = [
        message_size(&signed_aux, &crypto(SignatureType::ThresholdBls, CoinImpl::Tc), &m),
        message_size(&sval, &crypto(SignatureType::None, CoinImpl::Tc), &m),
        message_size(&share, &crypto(SignatureType::Eddsa, CoinImpl::Pc), &m),
        message_size(&share, &crypto(SignatureType::ThresholdBls, CoinImpl::Tc), &m),
        message_size(&eddsa, &crypto(SignatureType::Eddsa, CoinImpl::Pc), &m),
    ];
    (got == [220, 70, 212, 110, 364], format!("sizes {got:?}"))
}

fn oracle_coin(seed: u64, instance: InstanceId, round: Round) -> BinValue {
    let mut h = Sha256::new();
    h.update(b"coin");
    h.update(seed.to_le_bytes());
    h.update(instance.to_le_bytes());
    h.update(round.to_le_bytes());
    BinValue::from(h.finalize()[0] & 0x80 != 0)
}

fn revealed(out: &[CoinOutput]) -> Option<BinValue> {
    out.iter().find_map(|o| match o {
        CoinOutput::Reveal(_, v) => Some(*v),
        _ => None,
    })
}

/// Two processes combining disjoint-as-possible share subsets.
fn coin_agreement(pairs: u64) -> (usize, usize) {
    let params = thresholds(7).unwrap();
    let setup = TrustedSetup::new(params, 9);
    let cfg = CoinConfig::new(CoinScheme::Tc, ThresholdKind::Large, false, 0xC0FFEE);
    let mut disagree = 0;
    let mut off_oracle = 0;
    for k in 0..pairs {
        let (instance, round) = (k / 10, (k % 10 + 1) as Round);
        let ctx = |p| CoinContext::new(cfg, instance, setup.signer(ProcessId(p)).unwrap(), setup.verifier());
        let shares: Vec<Envelope> = (0..7).map(|p| ctx(p).make_share(&CoinState::new(round)).unwrap()).collect();
        let reveal = |me: usize, from: &[usize]| {
            let c = ctx(me);
            let mut cs = CoinState::new(round);
            let mut ops = Vec::new();
            c.request(&mut cs, &mut ops);
            from.iter().find_map(|&q| revealed(&c.absorb_share(&mut cs, &shares[q], &mut ops)))
        };
        let a = reveal(0, &[0, 1, 2, 3, 4]);
        let b = reveal(6, &[6, 5, 4, 3, 2]);
        disagree += (a.is_none() || a != b) as usize;
        off_oracle += (a != Some(oracle_coin(0xC0FFEE, instance, round))) as usize;
    }
    (disagree, off_oracle)
}

fn coin_broadcasts(trace: &[u8], rounds: &[Round]) -> usize {
    String::from_utf8_lossy(trace)
        .lines()
        .map(|l| serde_json::from_str::<TraceRecord>(l).unwrap())
        .flat_map(|r| r.actions)
        .filter(|a| rounds.iter().any(|r| a.starts_with(&format!("broadcast COIN_SHARE({r})")) || a.starts_with(&format!("broadcast COIN_ECHO({r})"))))
        .count()
}

fn coins() -> Verdict {
    let (disagree, off_oracle) = coin_agreement(10_000);

    let ones = (0..10_000u64).filter(|i| oracle_coin(17, *i, 4) == BinValue::One).count();
    let frac = ones as f64 / 10_000.0;
    let prf_ok = (0..10_000u64).all(|i| bincons::coins::coin_value(17, i, 4, false) == oracle_coin(17, i, 4));

    let mut preset_msgs = 0;
    let mut later_msgs = 0;
    for alg in Algorithm::ALL {
        for coin in [CoinScheme::Tc, CoinScheme::Tce, CoinScheme::Pc, CoinScheme::Pce] {
            let cfg = ExperimentConfig {
                algorithm: alg,
                coin,
                presets: true,
                instances: 20,
                warmup: 0,
                scheduler: Scheduler::random(3),
                ..Default::default()
            };
            let mut buf = Vec::new();
            run_experiment_traced(&cfg, Some(&mut buf)).unwrap();
            preset_msgs += coin_broadcasts(&buf, &[1, 2]);
            later_msgs += coin_broadcasts(&buf, &[3, 4, 5]);
        }
    }

    let mut early = 0;
    let mut reveals = 0;
    for seed in 0..1_000u64 {
        let alg = Algorithm::ALL[seed as usize % 6];
        let n = if seed % 2 == 0 { 4 } else { 7 };
        let coin = if seed % 3 == 0 { CoinScheme::Pce } else { CoinScheme::Tce };
        let p = ProtocolConfig::new(alg, n).unwrap().with_coin_scheme(coin);
        let need = p.params.quorum_large;
        let mut cfg = WorldConfig::new(p);
        cfg.scheduler = Scheduler::random(seed);
        let o = world(cfg).run_instance(seed, &gen_proposals(seed, n, 0.5, seed)).unwrap();
        reveals += o.coin_audit.len();
        early += o.coin_audit.iter().filter(|a| a.requesters < need).count();
    }

    let ok = disagree == 0 && off_oracle == 0 && (frac - 0.5).abs() <= 0.02 && prf_ok && preset_msgs == 0 && later_msgs > 0 && early == 0;
    (
        ok,
        format!(
            "{disagree} disagreements ({off_oracle} off oracle), ones {frac:.4}, {preset_msgs} coin messages in preset rounds ({later_msgs} later), {early}/{reveals} early echo reveals"
        ),
    )
}

fn determinism() -> Verdict {
    let grid = Grid::from_toml_str(
        r#"
        [base]
        instances = 30
        warmup = 5
        faults = "1:H"
        scheduler = "random:5"
        latency = "uniform:1:20:3"
        [sweep]
        algorithm = ["S1", "S3", "NS1", "NS2"]
        coin = ["TC", "PCE"]
        "#,
    )
    .unwrap();
    let base = std::env::temp_dir().join(format!("bincons-acceptance-{}", std::process::id()));
    let mut outputs = Vec::new();
    for run in 0..2 {
        let reports = run_grid(&grid).unwrap();
        let mut files = BTreeMap::new();
        for format in [Format::Csv, Format::Json] {
            for path in emit(&reports, format, &base.join(run.to_string())).unwrap() {
                files.insert(path.file_name().unwrap().to_owned(), std::fs::read(&path).unwrap());
            }
        }
        let mut trace = Vec::new();
        let cfg = ExperimentConfig {
            algorithm: Algorithm::NS3,
            n: 7,
            faults: Some(FaultSpec { count: 2, behavior: Behavior::HF }),
            scheduler: Scheduler::random(8),
            instances: 10,
            warmup: 0,
            ..Default::default()
        };
        run_experiment_traced(&cfg, Some(&mut trace)).unwrap();
        outputs.push((files, trace));
    }
    let _ = std::fs::remove_dir_all(&base);
    let same = outputs[0] == outputs[1];
    let bytes: usize = outputs[0].0.values().map(Vec::len).sum::<usize>() + outputs[0].1.len();
    (same && outputs[0].0.len() == 4, format!("{bytes} bytes of CSV, JSON and trace identical across runs"))
}

/// S1, one H node, random schedule 9: a process decides on a round it
/// has already left.
const PINNED_LATE: (Algorithm, u64) = (Algorithm::S1, 9);

fn explore_world(alg: Algorithm, b: Behavior, sched: Scheduler) -> World {
    let mut cfg = WorldConfig::new(ProtocolConfig::new(alg, 4).unwrap()).with_faults(1, b);
    cfg.scheduler = sched;
    world(cfg)
}

fn adversary_rules() -> Vec<Vec<AdversaryRule>> {
    let mut out = Vec::new();
    for kind in [
        MessageKind::Auxm,
        MessageKind::PreVote,
        MessageKind::MainVote,
        MessageKind::SVal,
        MessageKind::SValS1,
        MessageKind::AuxBoth,
        MessageKind::AuxStage2,
        MessageKind::CoinShare,
    ] {
        for victim in 0..3 {
            for (rounds, delay_ms) in [(None, 15.0), (Some((1, 1)), 40.0), (Some((2, 3)), 25.0)] {
                out.push(vec![
                    AdversaryRule {
                        sender: Some(ProcessId(victim)),
                        receiver: None,
                        kind: Some(kind),
                        rounds,
                        delay_ms,
                    },
                    AdversaryRule {
                        sender: None,
                        receiver: Some(ProcessId((victim + 1) % 3)),
                        kind: None,
                        rounds,
                        delay_ms: delay_ms / 3.0,
                    },
                ]);
            }
        }
    }
    out
}

fn exploration() -> Verdict {
    let mut runs = 0;
    let mut violations = 0;
    let mut stalls = 0;
    let mut late: BTreeMap<Algorithm, usize> = BTreeMap::new();
    for alg in Algorithm::ALL {
        for seed in 0..10_000u64 {
            let b = Behavior::ALL[seed as usize % Behavior::ALL.len()];
            let w = explore_world(alg, b, Scheduler::random(seed));
            runs += 1;
            match w.run_instance(seed, &gen_proposals(seed, 4, 0.5, seed)) {
                Ok(o) => {
                    violations += o.check_safety().is_err() as usize;
                    if o.correct().any(|n| n.decision.is_some_and(|d| d.late)) {
                        *late.entry(alg).or_default() += 1;
                    }
                }
                Err(_) => stalls += 1,
            }
        }
        for (k, rules) in adversary_rules().into_iter().enumerate() {
            let b = Behavior::ALL[k % Behavior::ALL.len()];
            let w = explore_world(alg, b, Scheduler::Adversary { rules });
            for i in 0..4 {
                runs += 1;
                match w.run_instance(i, &gen_proposals(k as u64, 4, 0.5, i)) {
                    Ok(o) => violations += o.check_safety().is_err() as usize,
                    Err(_) => stalls += 1,
                }
            }
        }
    }
    let (alg, seed) = PINNED_LATE;
    let b = Behavior::ALL[seed as usize % Behavior::ALL.len()];
    let pinned = explore_world(alg, b, Scheduler::random(seed))
        .run_instance(seed, &gen_proposals(seed, 4, 0.5, seed))
        .unwrap();
    let pinned_late = pinned.correct().any(|n| n.decision.is_some_and(|d| d.late));
    (
        violations == 0 && stalls == 0 && pinned_late,
        format!("{runs} schedules: {violations} safety violations, {stalls} stalls; late decisions per algorithm {late:?}; pinned {alg} seed {seed} late={pinned_late}"),
    )
}

fn mean_time(alg: Algorithm, coin: CoinScheme) -> f64 {
    run_experiment(&ExperimentConfig {
        algorithm: alg,
        coin,
        cpu_model: true,
        latency: LatencyModel::region("single").unwrap(),
        ..Default::default()
    })
    .unwrap()
    .summary
    .time_virtual_ms
}

fn cost_ordering() -> Verdict {
    let ns2 = mean_time(Algorithm::NS2, CoinScheme::Tc);
    let s2 = mean_time(Algorithm::S2, CoinScheme::Tc);
    let s1_tc = mean_time(Algorithm::S1, CoinScheme::Tc);
    let s1_pc = mean_time(Algorithm::S1, CoinScheme::Pc);
    (
        ns2 <= 0.1 * s2 && s1_pc < s1_tc,
        format!("NS2 {ns2:.3} ms vs S2 {s2:.3} ms; S1 with PC {s1_pc:.3} ms vs TC {s1_tc:.3} ms"),
    )
}

fn per_round_broadcasts(combine: bool) -> f64 {
    let p = ProtocolConfig::new(Algorithm::S1, 4).unwrap().with_combine_coin(combine);
    let w = world(WorldConfig::new(p));
    let (mut sum, mut k) = (0u64, 0u64);
    for i in 0..200 {
        let o = w.run_instance(i, &gen_proposals(21, 4, 0.5, i)).unwrap();
        for n in o.correct() {
            for (_, c) in n.broadcasts_by_round.range(2..) {
                sum += c;
                k += 1;
            }
        }
    }
    sum as f64 / k as f64
}

fn combine_coin() -> Verdict {
    let off = per_round_broadcasts(false);
    let on = per_round_broadcasts(true);
    (off == 2.0 && on == 1.0, format!("broadcasts per round after round 1: {off:.3} off, {on:.3} on"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("safety grid", safety_grid),
        ("fastest decision", fastest_decision),
        ("unanimous zero", unanimous_zero),
        ("S1 round tail", s1_tail),
        ("byte goldens", byte_goldens),
        ("coin properties", coins),
        ("determinism", determinism),
        ("schedule exploration", exploration),
        ("cost ordering", cost_ordering),
        ("combine coin", combine_coin),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = check();
        failed += !ok as usize;
        println!(
            "criterion {:>2} {name}: {} ({detail}) [{:.1}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
