//! Command-line front end for single experiments and grid sweeps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use bincons::coins::CoinScheme;
use bincons::error::{Error, Result};
use bincons::harness::{self, ExperimentConfig, FaultSpec, Format};
use bincons::netsim::{LatencyModel, Scheduler};
use bincons::primitives::ThresholdKind;
use bincons::protocols::Algorithm;

fn on_off(s: &str) -> std::result::Result<bool, String> {
    match s {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(format!("expected on or off, got {s:?}")),
    }
}

fn threshold(s: &str) -> std::result::Result<ThresholdKind, String> {
    match s {
        "small" | "t+1" => Ok(ThresholdKind::Small),
        "large" | "n-t" => Ok(ThresholdKind::Large),
        _ => Err(format!("expected small or large, got {s:?}")),
    }
}

#[derive(Parser, Debug)]
#[command(name = "bincons", version, about = "Simulate randomized binary Byzantine consensus")]
struct Cli {
    /// TOML experiment config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// TOML grid file with [base] and [sweep] tables.
    #[arg(long, conflicts_with = "config")]
    grid: Option<PathBuf>,

    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    coin: Option<CoinScheme>,
    /// small (t+1) or large (n-t).
    #[arg(long, value_parser = threshold)]
    coin_threshold: Option<ThresholdKind>,
    #[arg(long, value_parser = on_off)]
    presets: Option<bool>,
    #[arg(long, value_parser = on_off)]
    combine_coin: Option<bool>,
    #[arg(long, value_parser = on_off)]
    include_proofs: Option<bool>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p_one: Option<f64>,
    /// `<count>:<behavior>`, behavior one of B F H HF M N.
    #[arg(long)]
    faults: Option<FaultSpec>,
    /// constant:<ms> | uniform:<lo>:<hi>[:<seed>] | region:<single|us4|global8>
    #[arg(long)]
    latency_model: Option<LatencyModel>,
    /// fifo | random:<seed>[:<bound>] | adversary:<sender>:<kind>:<delay>[;...]
    #[arg(long)]
    scheduler: Option<Scheduler>,
    #[arg(long, value_parser = on_off)]
    cpu_model: Option<bool>,
    #[arg(long)]
    seed_proposals: Option<u64>,
    #[arg(long)]
    seed_coin: Option<u64>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,

    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// NDJSON transition trace of every instance.
    #[arg(long, conflicts_with = "grid")]
    trace: Option<PathBuf>,
    /// NDJSON list of revealed coin values.
    #[arg(long, conflicts_with = "grid")]
    coin_trace: Option<PathBuf>,
}

impl Cli {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => toml::from_str(&std::fs::read_to_string(p)?).map_err(|e| Error::Parse(e.to_string()))?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {$(
                if let Some(v) = self.$flag.clone() { c.$field = v; }
            )*};
        }
        set!(algorithm => algorithm, coin => coin, presets => presets, combine_coin => combine_coin,
             n => n, p_one => one_probability, latency_model => latency, scheduler => scheduler,
             cpu_model => cpu_model, seed_proposals => proposal_seed, seed_coin => coin_seed,
             instances => instances, warmup => warmup);
        if self.coin_threshold.is_some() {
            c.coin_threshold = self.coin_threshold;
        }
        if self.include_proofs.is_some() {
            c.include_proofs = self.include_proofs;
        }
        if self.faults.is_some() {
            c.faults = self.faults;
        }
        Ok(c)
    }
}

fn create(p: &std::path::Path) -> Result<File> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(File::create(p)?)
}

fn run(cli: &Cli) -> Result<()> {
    let reports = match &cli.grid {
        Some(path) => harness::run_grid(&harness::load_grid(path)?)?,
        None => {
            let cfg = cli.experiment()?;
            let report = match &cli.trace {
                Some(p) => {
                    let mut w = BufWriter::new(create(p)?);
                    let r = harness::run_experiment_traced(&cfg, Some(&mut w))?;
                    w.flush()?;
                    r
                }
                None => harness::run_experiment(&cfg)?,
            };
            if let Some(p) = &cli.coin_trace {
                let mut w = BufWriter::new(create(p)?);
                harness::write_coin_trace(&report, &mut w)?;
                w.flush()?;
            }
            vec![report]
        }
    };
    for r in &reports {
        let s = &r.summary;
        println!(
            "{}: time {:.3} ms, {:.3} KB/node, {:.3} msgs/node, rounds {:.3} [{}..{}]",
            r.label, s.time_virtual_ms, s.kb_per_node, s.msgs_per_node, s.rounds, s.round_min, s.round_max
        );
    }
    for p in harness::emit(&reports, cli.format, &cli.out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
