use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ProcessId;

/// One-way link delay in milliseconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LatencyModel {
    Constant { ms: f64 },
    /// `ms[from][to]`.
    PairMatrix { ms: Vec<Vec<f64>> },
    UniformRandom { lo_ms: f64, hi_ms: f64, seed: u64 },
    /// Processes are placed on regions round-robin; `rtt_ms[a][b]` is the
    /// round-trip time between regions.
    Region { name: String, rtt_ms: Vec<Vec<f64>> },
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel::Constant { ms: 1.0 }
    }
}

const SINGLE: [[f64; 1]; 1] = [[0.15]];

const US4: [[f64; 4]; 4] = [
    [0.15, 11.0, 28.0, 35.0],
    [11.0, 0.15, 24.0, 31.0],
    [28.0, 24.0, 0.15, 2.0],
    [35.0, 31.0, 2.0, 0.15],
];

const GLOBAL8: [[f64; 8]; 8] = [
    [0.15, 62.0, 75.0, 88.0, 180.0, 160.0, 230.0, 120.0],
    [62.0, 0.15, 2.0, 140.0, 120.0, 110.0, 170.0, 180.0],
    [75.0, 2.0, 0.15, 150.0, 130.0, 120.0, 160.0, 190.0],
    [88.0, 140.0, 150.0, 0.15, 230.0, 250.0, 280.0, 190.0],
    [180.0, 120.0, 130.0, 230.0, 0.15, 35.0, 110.0, 260.0],
    [160.0, 110.0, 120.0, 250.0, 35.0, 0.15, 100.0, 270.0],
    [230.0, 170.0, 160.0, 280.0, 110.0, 100.0, 0.15, 210.0],
    [120.0, 180.0, 190.0, 190.0, 260.0, 270.0, 210.0, 0.15],
];

fn table<const N: usize>(t: &[[f64; N]; N]) -> Vec<Vec<f64>> {
    t.iter().map(|r| r.to_vec()).collect()
}

impl LatencyModel {
    /// Bundled topologies: `single`, `us4`, `global8`.
    pub fn region(name: &str) -> Result<Self> {
        let rtt_ms = match name {
            "single" => table(&SINGLE),
            "us4" => table(&US4),
            "global8" => table(&GLOBAL8),
            _ => return Err(Error::Config(format!("unknown region preset {name:?}"))),
        };
        Ok(LatencyModel::Region {
            name: name.to_string(),
            rtt_ms,
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let ok = match self {
            LatencyModel::Constant { ms } => positive(*ms),
            LatencyModel::PairMatrix { ms } => {
                ms.len() >= n && ms.iter().all(|r| r.len() >= n && r.iter().copied().all(positive))
            }
            LatencyModel::UniformRandom { lo_ms, hi_ms, .. } => positive(*lo_ms) && hi_ms.is_finite() && hi_ms >= lo_ms,
            LatencyModel::Region { rtt_ms, .. } => {
                !rtt_ms.is_empty() && rtt_ms.iter().all(|r| r.len() == rtt_ms.len() && r.iter().copied().all(positive))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("latency model {self:?} needs finite positive delays for n = {n}")))
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            LatencyModel::UniformRandom { seed, .. } => *seed,
            _ => 0,
        }
    }

    /// Delay of one message; only the uniform model draws from `rng`.
    pub fn delay_ms(&self, from: ProcessId, to: ProcessId, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            LatencyModel::Constant { ms } => *ms,
            LatencyModel::PairMatrix { ms } => ms[from.0][to.0],
            LatencyModel::UniformRandom { lo_ms, hi_ms, .. } => {
                if hi_ms > lo_ms {
                    rng.gen_range(*lo_ms..*hi_ms)
                } else {
                    *lo_ms
                }
            }
            LatencyModel::Region { rtt_ms, .. } => {
                let k = rtt_ms.len();
                rtt_ms[from.0 % k][to.0 % k] / 2.0
            }
        }
    }
}

/// `constant:<ms>`, `uniform:<lo>:<hi>[:<seed>]`, `region:<single|us4|global8>`.
impl FromStr for LatencyModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |x: &str| x.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {x:?} in {s:?}")));
        match parts.as_slice() {
            ["constant", ms] => Ok(LatencyModel::Constant { ms: num(ms)? }),
            ["uniform", lo, hi] | ["uniform", lo, hi, _] => Ok(LatencyModel::UniformRandom {
                lo_ms: num(lo)?,
                hi_ms: num(hi)?,
                seed: match parts.get(3) {
                    Some(x) => x.parse().map_err(|_| Error::Parse(format!("bad seed in {s:?}")))?,
                    None => 0,
                },
            }),
            ["region", name] => LatencyModel::region(name),
            _ => Err(Error::Parse(format!(
                "latency model {s:?}: expected constant:<ms>, uniform:<lo>:<hi>[:<seed>] or region:<single|us4|global8>"
            ))),
        }
    }
}
