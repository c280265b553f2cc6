//! Every algorithm against every faulty behavior at n = 7 (t = 2), with
//! random delivery order.

use bincons::harness::{run_experiment, ExperimentConfig, FaultSpec};
use bincons::netsim::{Behavior, Scheduler};
use bincons::protocols::Algorithm;

fn main() -> bincons::error::Result<()> {
    print!("{:<5}", "");
    for b in Behavior::ALL {
        print!("{:>8}", b.name());
    }
    println!("   (mean decision round)");
    for alg in Algorithm::ALL {
        print!("{:<5}", alg.name());
        for behavior in Behavior::ALL {
            let r = run_experiment(&ExperimentConfig {
                algorithm: alg,
                n: 7,
                faults: Some(FaultSpec { count: 2, behavior }),
                scheduler: Scheduler::random(11),
                instances: 40,
                warmup: 0,
                ..Default::default()
            })?;
            print!("{:>8.2}", r.summary.rounds);
        }
        println!();
    }
    Ok(())
}
