//! Decision latency under the region presets, with and without the CPU
//! cost model.

use bincons::harness::{run_experiment, ExperimentConfig};
use bincons::netsim::LatencyModel;
use bincons::protocols::Algorithm;

fn main() -> bincons::error::Result<()> {
    println!("{:<8} {:<5} {:>10} {:>10}", "region", "alg", "net only", "with cpu");
    for region in ["single", "us4", "global8"] {
        let n = if region == "global8" { 8 } else { 4 };
        for alg in Algorithm::ALL {
            let run = |cpu_model| {
                run_experiment(&ExperimentConfig {
                    algorithm: alg,
                    n,
                    latency: LatencyModel::region(region)?,
                    cpu_model,
                    instances: 50,
                    ..Default::default()
                })
                .map(|r| r.summary.time_virtual_ms)
            };
            println!("{region:<8} {:<5} {:>10.3} {:>10.3}", alg.name(), run(false)?, run(true)?);
        }
    }
    Ok(())
}
