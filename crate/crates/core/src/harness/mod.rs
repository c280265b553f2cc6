//! Experiment runner: seeded proposals, sequential instances with warm-up,
//! metric aggregation, and figure-ready CSV/JSON export.

mod grid;
mod report;

pub use grid::{load_grid, run_grid, Grid};
pub use report::{emit, instances_csv, summary_csv, Format, InstanceMetrics, Report, Summary};

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coins::CoinScheme;
use crate::error::{Error, Result};
use crate::netsim::{Behavior, InstanceOutcome, LatencyModel, Scheduler, World, WorldConfig};
use crate::primitives::{CostModel, ThresholdKind};
use crate::protocols::{Algorithm, ProtocolConfig};
use crate::types::{BinValue, InstanceId};

/// `count` faulty processes, all with the same behavior. Written
/// `count:behavior`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FaultSpec {
    pub count: usize,
    pub behavior: Behavior,
}

impl FromStr for FaultSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (c, b) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("fault spec {s:?}: expected <count>:<behavior>")))?;
        Ok(FaultSpec {
            count: c.parse().map_err(|_| Error::Parse(format!("bad fault count {c:?}")))?,
            behavior: b.parse()?,
        })
    }
}

impl TryFrom<String> for FaultSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FaultSpec> for String {
    fn from(f: FaultSpec) -> String {
        f.to_string()
    }
}

impl fmt::Display for FaultSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.count, self.behavior)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub n: usize,
    pub coin: CoinScheme,
    /// Defaults to the algorithm's own threshold.
    pub coin_threshold: Option<ThresholdKind>,
    pub presets: bool,
    pub combine_coin: bool,
    /// Defaults to on for the signed algorithms.
    pub include_proofs: Option<bool>,
    pub one_probability: f64,
    pub faults: Option<FaultSpec>,
    #[serde(deserialize_with = "string_or_table")]
    pub latency: LatencyModel,
    #[serde(deserialize_with = "string_or_table")]
    pub scheduler: Scheduler,
    pub cpu_model: bool,
    pub cost: CostModel,
    pub proposal_seed: u64,
    pub coin_seed: u64,
    pub instances: usize,
    pub warmup: usize,
    pub retained_instances: usize,
}

/// Accepts either the compact string form or the full table.
fn string_or_table<'de, D, T>(d: D) -> std::result::Result<T, D::Error>
where
    D: serde::Deserializer<'de>,
    T: FromStr<Err = Error> + Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Form<T> {
        Short(String),
        Full(T),
    }
    match Form::<T>::deserialize(d)? {
        Form::Short(s) => s.parse().map_err(serde::de::Error::custom),
        Form::Full(t) => Ok(t),
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithm: Algorithm::S1,
            n: 4,
            coin: CoinScheme::Tc,
            coin_threshold: None,
            presets: false,
            combine_coin: false,
            include_proofs: None,
            one_probability: 0.5,
            faults: None,
            latency: LatencyModel::default(),
            scheduler: Scheduler::default(),
            cpu_model: false,
            cost: CostModel::default(),
            proposal_seed: 0,
            coin_seed: 0,
            instances: 110,
            warmup: 10,
            retained_instances: 10,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warmup >= self.instances {
            return Err(Error::Config(format!(
                "warmup ({}) must be below instances ({})",
                self.warmup, self.instances
            )));
        }
        if !(0.0..=1.0).contains(&self.one_probability) {
            return Err(Error::Config(format!("one_probability {} outside [0, 1]", self.one_probability)));
        }
        Ok(())
    }

    pub fn protocol(&self) -> Result<ProtocolConfig> {
        let mut p = ProtocolConfig::new(self.algorithm, self.n)?
            .with_coin_scheme(self.coin)
            .with_presets(self.presets)
            .with_coin_seed(self.coin_seed)
            .with_combine_coin(self.combine_coin);
        if let Some(t) = self.coin_threshold {
            p = p.with_coin_threshold(t);
        }
        if let Some(on) = self.include_proofs {
            p = p.with_include_proofs(on);
        }
        Ok(p)
    }

    pub fn world(&self) -> Result<WorldConfig> {
        let mut w = WorldConfig::new(self.protocol()?);
        w.latency = self.latency.clone();
        w.scheduler = self.scheduler.clone();
        w.cpu_model = self.cpu_model;
        w.cost = self.cost.clone();
        if let Some(f) = self.faults {
            w = w.with_faults(f.count, f.behavior);
        }
        Ok(w)
    }

    /// Short stable name of the configuration.
    pub fn label(&self) -> String {
        let faults = self.faults.map_or("none".to_string(), |f| f.to_string());
        format!(
            "{} {} n={} p={:.3} faults={}{}{}",
            self.algorithm,
            self.coin.name(),
            self.n,
            self.one_probability,
            faults,
            if self.presets { " presets" } else { "" },
            if self.combine_coin { " combine" } else { "" },
        )
    }
}

/// Proposal of every process for one instance. Depends only on
/// `(seed, node, instance)`, so configurations sharing a seed see the same
/// proposals.
pub fn gen_proposals(seed: u64, n: usize, p_one: f64, instance: InstanceId) -> Vec<BinValue> {
    (0..n)
        .map(|node| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((node as u64) << 40) ^ instance);
            BinValue::from(rng.gen_bool(p_one.clamp(0.0, 1.0)))
        })
        .collect()
}

/// Runs `cfg.instances` instances one after the other and aggregates the
/// ones after the warm-up. Every instance is checked for agreement and
/// validity; a failure aborts with the tail of that instance's trace.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    run_experiment_traced(cfg, None)
}

pub fn run_experiment_traced(cfg: &ExperimentConfig, mut trace: Option<&mut dyn Write>) -> Result<Report> {
    cfg.validate()?;
    let world = World::new(cfg.world()?)?;
    let mut rows = Vec::with_capacity(cfg.instances);
    let mut retained: Vec<InstanceOutcome> = Vec::new();
    for i in 0..cfg.instances as InstanceId {
        let props = gen_proposals(cfg.proposal_seed, cfg.n, cfg.one_probability, i);
        let outcome = match trace.as_deref_mut() {
            Some(w) => world.run_traced(i, &props, Some(w)),
            None => world.run_instance(i, &props),
        }
        .and_then(|o| o.check_safety().map(|_| o))
        .map_err(|e| abort(&world, cfg, i, &props, e))?;
        rows.push(InstanceMetrics::from_outcome(&outcome, (i as usize) < cfg.warmup));
        retained.push(outcome);
        if retained.len() > cfg.retained_instances {
            retained.remove(0);
        }
    }
    Ok(Report::new(cfg.clone(), rows, retained))
}

const TRACE_TAIL: usize = 40;

fn abort(world: &World, cfg: &ExperimentConfig, instance: InstanceId, props: &[BinValue], cause: Error) -> Error {
    let mut buf = Vec::new();
    let _ = world.run_traced(instance, props, Some(&mut buf));
    let text = String::from_utf8_lossy(&buf);
    let lines: Vec<&str> = text.lines().collect();
    let tail = lines[lines.len().saturating_sub(TRACE_TAIL)..].join("\n");
    Error::Aborted {
        label: cfg.label(),
        cause: Box::new(cause),
        trace_tail: tail,
    }
}

/// Writes one NDJSON line per revealed coin: instance, round, value.
pub fn write_coin_trace(report: &Report, out: &mut dyn Write) -> Result<()> {
    for row in &report.instances {
        for (round, value) in &row.coins {
            let rec = serde_json::json!({ "instance": row.instance, "round": round, "value": value.as_u8() });
            writeln!(out, "{rec}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
