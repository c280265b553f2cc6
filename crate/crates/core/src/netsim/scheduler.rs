use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Envelope, MessageKind, ProcessId, Round};

/// Extra delay on top of link latency. Every adjustment is bounded, so no
/// reception is postponed forever.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scheduler {
    /// Per-channel FIFO order.
    #[default]
    Fifo,
    /// Uniform extra delay in `[0, bound_ms)` per message.
    Random { seed: u64, bound_ms: f64 },
    Adversary { rules: Vec<AdversaryRule> },
}

/// Delays matching messages by `delay_ms`. Unset fields match anything.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdversaryRule {
    #[serde(default)]
    pub sender: Option<ProcessId>,
    #[serde(default)]
    pub receiver: Option<ProcessId>,
    #[serde(default)]
    pub kind: Option<MessageKind>,
    /// Inclusive round range.
    #[serde(default)]
    pub rounds: Option<(Round, Round)>,
    pub delay_ms: f64,
}

impl AdversaryRule {
    pub fn matches(&self, e: &Envelope, to: ProcessId) -> bool {
        self.sender.is_none_or(|s| s == e.sender)
            && self.receiver.is_none_or(|r| r == to)
            && self.kind.is_none_or(|k| k == e.kind)
            && self.rounds.is_none_or(|(lo, hi)| (lo..=hi).contains(&e.round))
    }
}

impl Scheduler {
    pub const DEFAULT_RANDOM_BOUND_MS: f64 = 10.0;

    pub fn random(seed: u64) -> Self {
        Scheduler::Random {
            seed,
            bound_ms: Self::DEFAULT_RANDOM_BOUND_MS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        let good = match self {
            Scheduler::Fifo => true,
            Scheduler::Random { bound_ms, .. } => ok(*bound_ms),
            Scheduler::Adversary { rules } => rules.iter().all(|r| ok(r.delay_ms)),
        };
        if good {
            Ok(())
        } else {
            Err(Error::Config(format!("scheduler {self:?} needs finite non-negative delays")))
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Scheduler::Random { seed, .. } => *seed,
            _ => 0,
        }
    }

    pub fn keeps_fifo(&self) -> bool {
        matches!(self, Scheduler::Fifo)
    }

    pub fn adjustment_ms(&self, e: &Envelope, to: ProcessId, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Scheduler::Fifo => 0.0,
            Scheduler::Random { bound_ms, .. } => {
                if *bound_ms > 0.0 {
                    rng.gen_range(0.0..*bound_ms)
                } else {
                    0.0
                }
            }
            Scheduler::Adversary { rules } => rules.iter().filter(|r| r.matches(e, to)).map(|r| r.delay_ms).sum(),
        }
    }
}

fn parse_kind(s: &str) -> Result<Option<MessageKind>> {
    if s == "*" {
        return Ok(None);
    }
    MessageKind::ALL
        .into_iter()
        .find(|k| k.name().eq_ignore_ascii_case(s))
        .map(Some)
        .ok_or_else(|| Error::Parse(format!("unknown message kind {s:?}")))
}

/// `fifo`, `random:<seed>[:<bound_ms>]`, or
/// `adversary:<sender|*>:<kind|*>:<delay_ms>[;...]`.
impl FromStr for Scheduler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("scheduler {s:?}"));
        if s == "fifo" {
            return Ok(Scheduler::Fifo);
        }
        if let Some(rest) = s.strip_prefix("random:") {
            let mut it = rest.split(':');
            let seed = it.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
            let bound_ms = match it.next() {
                Some(x) => x.parse().map_err(|_| bad())?,
                None => Self::DEFAULT_RANDOM_BOUND_MS,
            };
            return Ok(Scheduler::Random { seed, bound_ms });
        }
        if let Some(rest) = s.strip_prefix("adversary:") {
            let mut rules = Vec::new();
            for spec in rest.split(';') {
                let f: Vec<&str> = spec.split(':').collect();
                let [sender, kind, delay] = f.as_slice() else {
                    return Err(bad());
                };
                rules.push(AdversaryRule {
                    sender: match *sender {
                        "*" => None,
                        x => Some(ProcessId(x.parse().map_err(|_| bad())?)),
                    },
                    kind: parse_kind(kind)?,
                    delay_ms: delay.parse().map_err(|_| bad())?,
                    ..Default::default()
                });
            }
            return Ok(Scheduler::Adversary { rules });
        }
        Err(bad())
    }
}
