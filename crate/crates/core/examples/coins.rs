//! Common coin values and the cost of each coin scheme.

use bincons::coins::{coin_value, CoinScheme};
use bincons::harness::{run_experiment, ExperimentConfig};
use bincons::protocols::Algorithm;
use bincons::types::BinValue;

fn main() -> bincons::error::Result<()> {
    let seed = 0xC0FFEE;
    let row = |presets| -> String {
        (1..=10).map(|r| coin_value(seed, 7, r, presets).as_u8().to_string()).collect::<Vec<_>>().join(" ")
    };
    println!("instance 7, rounds 1..10");
    println!("  presets off: {}", row(false));
    println!("  presets on:  {}", row(true));

    let ones = (0..10_000u64).filter(|i| coin_value(seed, *i, 3, false) == BinValue::One).count();
    println!("round 3 over 10000 instances: {:.4} ones\n", ones as f64 / 10_000.0);

    for coin in [CoinScheme::Tc, CoinScheme::Tce, CoinScheme::Pc, CoinScheme::Pce] {
        let r = run_experiment(&ExperimentConfig {
            algorithm: Algorithm::NS1,
            coin,
            cpu_model: true,
            latency: "region:single".parse()?,
            instances: 60,
            ..Default::default()
        })?;
        println!("NS1 with {:<3}: {:7.3} ms  {:6.3} KB/node", coin.name(), r.summary.time_virtual_ms, r.summary.kb_per_node);
    }
    Ok(())
}
