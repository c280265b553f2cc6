//! A parameter sweep from TOML, written as figure-ready CSV.
//!
//! cargo run --release --example grid_sweep -- [out-dir]

use bincons::harness::{emit, run_grid, Format, Grid};

const GRID: &str = r#"
[base]
n = 4
instances = 60
warmup = 10
latency = "region:us4"
cpu_model = true

[sweep]
algorithm = ["S1", "S2", "S3", "NS1", "NS2", "NS3"]
one_probability = [0.3333333333333333, 0.5, 0.6666666666666666]
"#;

fn main() -> bincons::error::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "target/grid".into());
    let reports = run_grid(&Grid::from_toml_str(GRID)?)?;
    for r in &reports {
        println!("{:<40} {:8.3} ms {:7.3} rounds", r.label, r.summary.time_virtual_ms, r.summary.rounds);
    }
    for p in emit(&reports, Format::Csv, dir.as_ref())? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
