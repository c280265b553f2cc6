use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::netsim::{ns_to_ms, InstanceOutcome};
use crate::types::{BinValue, InstanceId, Round};

/// Averages over the non-faulty processes of one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetrics {
    pub instance: InstanceId,
    pub warmup: bool,
    /// Virtual milliseconds from instance start to decision.
    pub decision_vtime_ms: f64,
    pub messages_sent: f64,
    pub bytes_sent: f64,
    pub decision_round: f64,
    pub min_round: Round,
    pub max_round: Round,
    /// Coin values revealed during the instance.
    pub coins: BTreeMap<Round, BinValue>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, k) = xs.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    if k == 0 {
        0.0
    } else {
        sum / k as f64
    }
}

impl InstanceMetrics {
    pub fn from_outcome(o: &InstanceOutcome, warmup: bool) -> Self {
        let decided: Vec<_> = o.correct().filter_map(|x| x.decision).collect();
        InstanceMetrics {
            instance: o.instance,
            warmup,
            decision_vtime_ms: mean(decided.iter().map(|d| ns_to_ms(d.vtime_ns))),
            messages_sent: mean(o.correct().map(|x| x.messages_sent as f64)),
            bytes_sent: mean(o.correct().map(|x| x.bytes_sent as f64)),
            decision_round: mean(decided.iter().map(|d| d.round as f64)),
            min_round: decided.iter().map(|d| d.round).min().unwrap_or(0),
            max_round: decided.iter().map(|d| d.round).max().unwrap_or(0),
            coins: o.coins.clone(),
        }
    }

    pub fn kb(&self) -> f64 {
        self.bytes_sent / 1000.0
    }
}

/// The four figure panels over the measured instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub measured: usize,
    pub time_virtual_ms: f64,
    pub kb_per_node: f64,
    pub msgs_per_node: f64,
    pub rounds: f64,
    pub round_min: Round,
    pub round_max: Round,
}

impl Summary {
    pub fn from_rows(rows: &[InstanceMetrics]) -> Self {
        let m: Vec<&InstanceMetrics> = rows.iter().filter(|r| !r.warmup).collect();
        Summary {
            measured: m.len(),
            time_virtual_ms: mean(m.iter().map(|r| r.decision_vtime_ms)),
            kb_per_node: mean(m.iter().map(|r| r.kb())),
            msgs_per_node: mean(m.iter().map(|r| r.messages_sent)),
            rounds: mean(m.iter().map(|r| r.decision_round)),
            round_min: m.iter().map(|r| r.min_round).min().unwrap_or(0),
            round_max: m.iter().map(|r| r.max_round).max().unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub label: String,
    pub config: ExperimentConfig,
    pub summary: Summary,
    pub instances: Vec<InstanceMetrics>,
    /// Full outcomes of the last few instances.
    #[serde(skip)]
    pub retained: Vec<InstanceOutcome>,
}

impl Report {
    pub fn new(config: ExperimentConfig, instances: Vec<InstanceMetrics>, retained: Vec<InstanceOutcome>) -> Self {
        Report {
            label: config.label(),
            summary: Summary::from_rows(&instances),
            config,
            instances,
            retained,
        }
    }

    pub fn measured(&self) -> impl Iterator<Item = &InstanceMetrics> {
        self.instances.iter().filter(|r| !r.warmup)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Parse(format!("format {s:?}: expected csv or json"))),
        }
    }
}

fn r3(x: f64) -> String {
    format!("{x:.3}")
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    config: &'a str,
    algorithm: String,
    coin: &'a str,
    n: usize,
    p_one: String,
    faults: String,
    metric: &'a str,
    value: String,
    min: String,
    max: String,
}

#[derive(Serialize)]
struct InstanceRow<'a> {
    config: &'a str,
    instance: InstanceId,
    warmup: bool,
    time_virtual_ms: String,
    kb: String,
    msgs: String,
    rounds: String,
    round_min: Round,
    round_max: Round,
}

fn summary_rows(r: &Report) -> Vec<SummaryRow<'_>> {
    let s = &r.summary;
    let c = &r.config;
    let panels = [
        ("time_virtual_ms", s.time_virtual_ms, None),
        ("kb_per_node", s.kb_per_node, None),
        ("msgs_per_node", s.msgs_per_node, None),
        ("rounds", s.rounds, Some((s.round_min, s.round_max))),
    ];
    panels
        .into_iter()
        .map(|(metric, value, range)| SummaryRow {
            config: &r.label,
            algorithm: c.algorithm.to_string(),
            coin: c.coin.name(),
            n: c.n,
            p_one: r3(c.one_probability),
            faults: c.faults.map_or("none".into(), |f| f.to_string()),
            metric,
            value: r3(value),
            min: range.map_or(String::new(), |x| x.0.to_string()),
            max: range.map_or(String::new(), |x| x.1.to_string()),
        })
        .collect()
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Figure-ready summary: one row per (configuration, panel).
pub fn summary_csv(reports: &[Report]) -> Result<Vec<u8>> {
    csv_bytes(reports.iter().flat_map(summary_rows))
}

/// Full per-instance table, warm-ups flagged.
pub fn instances_csv(reports: &[Report]) -> Result<Vec<u8>> {
    csv_bytes(reports.iter().flat_map(|r| {
        r.instances.iter().map(|i| InstanceRow {
            config: &r.label,
            instance: i.instance,
            warmup: i.warmup,
            time_virtual_ms: r3(i.decision_vtime_ms),
            kb: r3(i.kb()),
            msgs: r3(i.messages_sent),
            rounds: r3(i.decision_round),
            round_min: i.min_round,
            round_max: i.max_round,
        })
    }))
}

/// Writes `summary.<ext>` and `instances.<ext>` under `dir`.
pub fn emit(reports: &[Report], format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let (summary, instances, ext) = match format {
        Format::Csv => (summary_csv(reports)?, instances_csv(reports)?, "csv"),
        Format::Json => {
            let s: Vec<_> = reports
                .iter()
                .map(|r| serde_json::json!({ "config": r.label, "settings": r.config, "summary": r.summary }))
                .collect();
            let i: Vec<_> = reports
                .iter()
                .map(|r| serde_json::json!({ "config": r.label, "instances": r.instances }))
                .collect();
            (json_bytes(&s)?, json_bytes(&i)?, "json")
        }
    };
    let a = dir.join(format!("summary.{ext}"));
    let b = dir.join(format!("instances.{ext}"));
    fs::write(&a, summary)?;
    fs::write(&b, instances)?;
    Ok(vec![a, b])
}
