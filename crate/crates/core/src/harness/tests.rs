use super::*;

fn small(alg: Algorithm, p: f64) -> ExperimentConfig {
    ExperimentConfig {
        algorithm: alg,
        one_probability: p,
        instances: 30,
        warmup: 5,
        ..Default::default()
    }
}

#[test]
fn proposals_depend_only_on_seed_node_instance() {
    let a = gen_proposals(7, 16, 0.5, 3);
    assert_eq!(a, gen_proposals(7, 16, 0.5, 3));
    assert_eq!(&a[..4], &gen_proposals(7, 4, 0.5, 3)[..]);
    assert_ne!(a, gen_proposals(7, 16, 0.5, 4));
    assert!(gen_proposals(1, 9, 1.0, 0).iter().all(|b| *b == BinValue::One));
    assert!(gen_proposals(1, 9, 0.0, 0).iter().all(|b| *b == BinValue::Zero));
}

#[test]
fn proposal_frequency_two_thirds() {
    let ones: usize = (0..1000)
        .flat_map(|i| gen_proposals(42, 10, 2.0 / 3.0, i))
        .filter(|b| *b == BinValue::One)
        .count();
    let f = ones as f64 / 10_000.0;
    assert!((f - 0.667).abs() <= 0.02, "{f}");
}

#[test]
fn ns2_rounds_in_band() {
    let r = run_experiment(&small(Algorithm::NS2, 0.5)).unwrap();
    assert!((1.0..=2.0).contains(&r.summary.rounds), "{}", r.summary.rounds);
    assert_eq!(r.summary.measured, 25);
    assert_eq!(r.retained.len(), 10);
}

#[test]
fn summary_recomputes_from_table() {
    let r = run_experiment(&small(Algorithm::S1, 0.5)).unwrap();
    let m: Vec<&InstanceMetrics> = r.measured().collect();
    let avg = |f: fn(&InstanceMetrics) -> f64| m.iter().map(|x| f(x)).sum::<f64>() / m.len() as f64;
    assert_eq!(avg(|x| x.decision_vtime_ms), r.summary.time_virtual_ms);
    assert_eq!(avg(|x| x.messages_sent), r.summary.msgs_per_node);
    assert_eq!(avg(|x| x.kb()), r.summary.kb_per_node);
    assert_eq!(avg(|x| x.decision_round), r.summary.rounds);
}

#[test]
fn nine_configs_nine_labels() {
    let grid = Grid::from_toml_str(
        r#"
        [base]
        instances = 12
        warmup = 2
        latency = "region:single"
        [sweep]
        algorithm = ["S1", "S2", "NS2"]
        one_probability = [0.3333333333333333, 0.5, 0.6666666666666666]
        "#,
    )
    .unwrap();
    let reports = run_grid(&grid).unwrap();
    assert_eq!(reports.len(), 9);
    let csv = String::from_utf8(summary_csv(&reports).unwrap()).unwrap();
    assert_eq!(csv.lines().count(), 1 + 9 * 4);
    let labels: std::collections::BTreeSet<_> = reports.iter().map(|r| r.label.clone()).collect();
    assert_eq!(labels.len(), 9);
    assert_eq!(summary_csv(&reports).unwrap(), summary_csv(&run_grid(&grid).unwrap()).unwrap());
}

#[test]
fn kb_is_decimal_and_rounded() {
    let mut r = run_experiment(&small(Algorithm::S1, 1.0)).unwrap();
    for row in &mut r.instances {
        row.bytes_sent = 1234.5678;
    }
    let csv = String::from_utf8(instances_csv(&[r]).unwrap()).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",1.235,"), "{csv}");
}

#[test]
fn fault_spec_round_trip() {
    let f: FaultSpec = "2:HF".parse().unwrap();
    assert_eq!(f.to_string(), "2:HF");
    assert!("2".parse::<FaultSpec>().is_err());
    assert!("x:M".parse::<FaultSpec>().is_err());
}

#[test]
fn config_from_toml() {
    let cfg: ExperimentConfig = toml::from_str(
        r#"
        algorithm = "NS1"
        n = 7
        faults = "2:M"
        scheduler = "random:3"
        latency = { kind = "CONSTANT", ms = 2.5 }
        "#,
    )
    .unwrap();
    assert_eq!(cfg.faults.unwrap().count, 2);
    assert_eq!(cfg.latency, LatencyModel::Constant { ms: 2.5 });
    assert!(toml::from_str::<ExperimentConfig>("bogus = 1").is_err());
}

#[test]
fn warmup_must_leave_instances() {
    let cfg = ExperimentConfig {
        instances: 5,
        warmup: 5,
        ..Default::default()
    };
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn coin_values_shared_across_configs() {
    let a = run_experiment(&small(Algorithm::S1, 0.5)).unwrap();
    let b = run_experiment(&ExperimentConfig {
        coin: CoinScheme::Pc,
        ..small(Algorithm::S1, 0.5)
    })
    .unwrap();
    for (x, y) in a.instances.iter().zip(&b.instances) {
        for (r, v) in &x.coins {
            if let Some(w) = y.coins.get(r) {
                assert_eq!(v, w);
            }
        }
    }
}
