//! Deterministic discrete-event simulator.
//!
//! A [`World`] owns the protocol configuration, the trusted setup, the
//! network models and the fault assignment. [`World::run_instance`] runs one
//! consensus instance to completion in virtual time. Events are ordered by
//! `(time, sequence number)`, so a run is a pure function of the world and
//! its seeds.
//!
//! With the CPU model on, each process handles one event at a time and
//! every crypto operation it performs advances its local clock by the
//! operation's cost. Messages leave when the handling that produced them
//! ends.

mod byzantine;
mod latency;
mod scheduler;
mod trace;

pub use byzantine::{apply_behavior, Behavior};
pub use latency::LatencyModel;
pub use scheduler::{AdversaryRule, Scheduler};
pub use trace::TraceRecord;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primitives::{message_size, op_cost, CostModel, CryptoConfig, TrustedSetup};
use crate::protocols::{Action, Node, ProtocolConfig};
use crate::types::{BinValue, Envelope, InstanceId, MessageKind, ProcessId, Round};

pub type VTime = u64;

pub fn ms_to_ns(ms: f64) -> VTime {
    (ms * 1e6).round().max(0.0) as VTime
}

pub fn ns_to_ms(ns: VTime) -> f64 {
    ns as f64 / 1e6
}

/// Everything except proposals that determines a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorldConfig {
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub latency: LatencyModel,
    #[serde(default)]
    pub scheduler: Scheduler,
    /// Faulty processes and their behaviors.
    #[serde(default)]
    pub faults: BTreeMap<ProcessId, Behavior>,
    #[serde(default)]
    pub cpu_model: bool,
    #[serde(default)]
    pub cost: CostModel,
    #[serde(default)]
    pub setup_seed: u64,
    #[serde(default = "default_event_limit")]
    pub event_limit: u64,
}

fn default_event_limit() -> u64 {
    5_000_000
}

impl WorldConfig {
    pub fn new(protocol: ProtocolConfig) -> Self {
        WorldConfig {
            protocol,
            latency: LatencyModel::default(),
            scheduler: Scheduler::default(),
            faults: BTreeMap::new(),
            cpu_model: false,
            cost: CostModel::default(),
            setup_seed: 0,
            event_limit: default_event_limit(),
        }
    }

    /// Marks the last `count` processes faulty with `behavior`.
    pub fn with_faults(mut self, count: usize, behavior: Behavior) -> Self {
        let n = self.protocol.params.n;
        self.faults = (n.saturating_sub(count)..n).map(|p| (ProcessId(p), behavior)).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.protocol.params;
        self.protocol.validate()?;
        self.latency.validate(p.n)?;
        self.scheduler.validate()?;
        self.cost.validate()?;
        if self.faults.len() > p.t {
            return Err(Error::Config(format!(
                "{} faulty processes exceed t = {} for n = {}",
                self.faults.len(),
                p.t,
                p.n
            )));
        }
        if let Some(q) = self.faults.keys().find(|q| q.0 >= p.n) {
            return Err(Error::Config(format!("faulty process {q} is not in 0..{}", p.n)));
        }
        if !self.protocol.include_proofs
            && self.protocol.algorithm.is_signed()
            && self.faults.values().any(|b| b.equivocates())
        {
            return Err(Error::Config(
                "value-rewriting faults against a signed algorithm require include_proofs".into(),
            ));
        }
        Ok(())
    }

    pub fn is_faulty(&self, p: ProcessId) -> bool {
        self.faults.contains_key(&p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub value: BinValue,
    pub round: Round,
    pub vtime_ns: VTime,
    /// Decided on a round older than the one the process was in.
    pub late: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeOutcome {
    pub process: ProcessId,
    pub faulty: bool,
    pub decision: Option<Decision>,
    /// Point-to-point copies sent to other processes.
    pub messages_sent: u64,
    pub bytes_sent: u64,
    /// Broadcasts carrying a consensus message issued before deciding.
    pub broadcasts_to_decision: u64,
    /// Round and coin broadcasts by the round of the envelope.
    pub broadcasts_by_round: BTreeMap<Round, u64>,
    pub final_round: Round,
}

/// State of a coin round at the moment one process revealed it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoinAudit {
    pub process: ProcessId,
    pub round: Round,
    pub value: BinValue,
    /// Processes that had reached the coin point of `round`.
    pub requesters: usize,
    pub vtime_ns: VTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub instance: InstanceId,
    pub proposals: Vec<BinValue>,
    pub nodes: Vec<NodeOutcome>,
    pub coins: BTreeMap<Round, BinValue>,
    pub coin_audit: Vec<CoinAudit>,
    pub events: u64,
    pub end_ns: VTime,
}

impl InstanceOutcome {
    pub fn correct(&self) -> impl Iterator<Item = &NodeOutcome> {
        self.nodes.iter().filter(|o| !o.faulty)
    }

    /// Agreement and validity over the non-faulty processes.
    pub fn check_safety(&self) -> Result<()> {
        let mut decided = self.correct().filter_map(|o| o.decision.map(|d| (o.process, d.value)));
        if let Some((p, v)) = decided.next() {
            if let Some((q, w)) = decided.find(|(_, w)| *w != v) {
                return Err(Error::Agreement {
                    instance: self.instance,
                    detail: format!("{p} decided {v}, {q} decided {w}"),
                });
            }
            let proposed = self.correct().any(|o| self.proposals[o.process.0] == v);
            if !proposed {
                return Err(Error::Validity {
                    instance: self.instance,
                    detail: format!("{v} decided but no correct process proposed it"),
                });
            }
        }
        Ok(())
    }

    pub fn max_round(&self) -> Round {
        self.correct().filter_map(|o| o.decision.map(|d| d.round)).max().unwrap_or(0)
    }
}

/// Delivery time of `e` sent from `from` to `to` at `at`: link latency
/// plus the scheduler's adjustment, never less than 1 ns.
pub fn transmit(
    e: &Envelope,
    from: ProcessId,
    to: ProcessId,
    at: VTime,
    latency: &LatencyModel,
    sched: &Scheduler,
    rng: &mut ChaCha8Rng,
) -> VTime {
    let lat = latency.delay_ms(from, to, rng);
    let adj = sched.adjustment_ms(e, to, rng);
    at + ms_to_ns(lat + adj).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct EventKey {
    time: VTime,
    seq: u64,
}

struct Event {
    to: ProcessId,
    env: Arc<Envelope>,
}

/// A configured system ready to run instances.
pub struct World {
    cfg: WorldConfig,
    setup: TrustedSetup,
    crypto: CryptoConfig,
    roster: Vec<ProcessId>,
}

impl World {
    pub fn new(cfg: WorldConfig) -> Result<Self> {
        cfg.validate()?;
        let setup = TrustedSetup::new(cfg.protocol.params, cfg.setup_seed);
        let crypto = cfg.protocol.crypto();
        let roster = cfg.protocol.params.processes().filter(|p| !cfg.is_faulty(*p)).collect();
        Ok(World {
            cfg,
            setup,
            crypto,
            roster,
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    pub fn run_instance(&self, instance: InstanceId, proposals: &[BinValue]) -> Result<InstanceOutcome> {
        self.run_traced(instance, proposals, None)
    }

    /// Runs one instance, writing one NDJSON record per transition to
    /// `trace` when given.
    pub fn run_traced(
        &self,
        instance: InstanceId,
        proposals: &[BinValue],
        trace: Option<&mut dyn Write>,
    ) -> Result<InstanceOutcome> {
        let n = self.cfg.protocol.params.n;
        if proposals.len() != n {
            return Err(Error::Config(format!("{} proposals for n = {n}", proposals.len())));
        }
        let mut run = Run::new(self, instance, trace)?;
        run.start(proposals)?;
        run.drive()?;
        Ok(run.finish(proposals))
    }
}

struct Run<'w, 't> {
    world: &'w World,
    instance: InstanceId,
    nodes: Vec<Node>,
    out: Vec<NodeOutcome>,
    queue: BinaryHeap<Reverse<(EventKey, usize)>>,
    events: Vec<Option<Event>>,
    seq: u64,
    busy_until: Vec<VTime>,
    last_delivery: Vec<Vec<VTime>>,
    rng: ChaCha8Rng,
    coins: BTreeMap<Round, BinValue>,
    requests: BTreeMap<Round, usize>,
    audit: Vec<CoinAudit>,
    handled: u64,
    now: VTime,
    trace: Option<&'t mut dyn Write>,
}

impl<'w, 't> Run<'w, 't> {
    fn new(world: &'w World, instance: InstanceId, trace: Option<&'t mut dyn Write>) -> Result<Self> {
        let n = world.cfg.protocol.params.n;
        let nodes = (0..n)
            .map(|p| Node::new(world.cfg.protocol, ProcessId(p), instance, &world.setup))
            .collect::<Result<Vec<_>>>()?;
        let out = (0..n)
            .map(|p| NodeOutcome {
                process: ProcessId(p),
                faulty: world.cfg.is_faulty(ProcessId(p)),
                ..Default::default()
            })
            .collect();
        let seed = world.cfg.latency.seed() ^ world.cfg.scheduler.seed().rotate_left(32) ^ instance;
        Ok(Run {
            world,
            instance,
            nodes,
            out,
            queue: BinaryHeap::new(),
            events: Vec::new(),
            seq: 0,
            busy_until: vec![0; n],
            last_delivery: vec![vec![0; n]; n],
            rng: ChaCha8Rng::seed_from_u64(seed),
            coins: BTreeMap::new(),
            requests: BTreeMap::new(),
            audit: Vec::new(),
            handled: 0,
            now: 0,
            trace,
        })
    }

    fn push(&mut self, time: VTime, to: ProcessId, env: Arc<Envelope>) {
        let key = EventKey { time, seq: self.seq };
        self.seq += 1;
        self.events.push(Some(Event { to, env }));
        self.queue.push(Reverse((key, self.events.len() - 1)));
    }

    fn cost_ns(&mut self, p: ProcessId) -> VTime {
        let ops = self.nodes[p.0].drain_ops();
        if !self.world.cfg.cpu_model {
            return 0;
        }
        let n = self.world.cfg.protocol.params.n;
        let ms: f64 = ops
            .into_iter()
            .map(|op| op_cost(op, &self.world.crypto, n, &self.world.cfg.cost))
            .sum();
        ms_to_ns(ms)
    }

    fn start(&mut self, proposals: &[BinValue]) -> Result<()> {
        for (p, &v) in proposals.iter().enumerate() {
            let acts = self.nodes[p].init(v);
            let cost = self.cost_ns(ProcessId(p));
            self.busy_until[p] = cost;
            self.record(ProcessId(p), None, &acts)?;
            self.dispatch(ProcessId(p), acts, cost);
        }
        Ok(())
    }

    fn drive(&mut self) -> Result<()> {
        let cap = self.world.cfg.protocol.round_cap;
        while let Some(Reverse((key, idx))) = self.queue.pop() {
            if self.all_correct_terminated() {
                break;
            }
            let ev = self.events[idx].take().expect("event handled once");
            let p = ev.to.0;
            if self.world.cfg.cpu_model && self.busy_until[p] > key.time {
                let at = self.busy_until[p];
                self.push(at, ev.to, ev.env);
                continue;
            }
            self.handled += 1;
            if self.handled > self.world.cfg.event_limit {
                return Err(Error::Stalled {
                    undecided: self.undecided(),
                    instance: self.instance,
                });
            }
            self.now = key.time;
            let acts = self.nodes[p].handle(&ev.env);
            let done = key.time + self.cost_ns(ev.to);
            self.busy_until[p] = done;
            self.record(ev.to, Some(&ev.env), &acts)?;
            self.dispatch(ev.to, acts, done);
            let st = self.nodes[p].state();
            if !self.out[p].faulty && st.decided.is_none() && st.round > cap {
                return Err(Error::RoundCapExceeded {
                    process: ev.to,
                    round: st.round,
                    instance: self.instance,
                });
            }
        }
        let undecided = self.undecided();
        if !undecided.is_empty() {
            return Err(Error::Stalled {
                undecided,
                instance: self.instance,
            });
        }
        Ok(())
    }

    fn undecided(&self) -> Vec<ProcessId> {
        self.out
            .iter()
            .filter(|o| !o.faulty && self.nodes[o.process.0].decided().is_none())
            .map(|o| o.process)
            .collect()
    }

    fn all_correct_terminated(&self) -> bool {
        self.out.iter().all(|o| o.faulty || self.nodes[o.process.0].terminated())
    }

    fn record(&mut self, p: ProcessId, event: Option<&Envelope>, acts: &[Action]) -> Result<()> {
        if let Some(w) = self.trace.as_mut() {
            let rec = TraceRecord::new(self.now, p, self.instance, self.nodes[p.0].state().round, event, acts);
            serde_json::to_writer(&mut **w, &rec).map_err(|e| Error::Io(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    fn dispatch(&mut self, p: ProcessId, acts: Vec<Action>, at: VTime) {
        for a in acts {
            match a {
                Action::Broadcast(e) => self.broadcast(p, e, at),
                Action::Decide { value, round } => {
                    let late = self.nodes[p.0].state().round > round;
                    self.out[p.0].decision = Some(Decision {
                        value,
                        round,
                        vtime_ns: at,
                        late,
                    });
                }
                Action::RequestCoinShare(r) => *self.requests.entry(r).or_default() += 1,
                Action::RevealCoin { round, value } => {
                    self.coins.entry(round).or_insert(value);
                    self.audit.push(CoinAudit {
                        process: p,
                        round,
                        value,
                        requesters: self.requests.get(&round).copied().unwrap_or(0),
                        vtime_ns: at,
                    });
                }
                Action::Terminate => {}
            }
        }
    }

    fn broadcast(&mut self, p: ProcessId, e: Envelope, at: VTime) {
        let carries_consensus =
            e.kind.is_consensus() || e.piggyback.as_ref().is_some_and(|i| i.kind.is_consensus());
        let o = &mut self.out[p.0];
        if e.kind != MessageKind::ProofOfDecision {
            *o.broadcasts_by_round.entry(e.round).or_default() += 1;
        }
        if carries_consensus && o.decision.is_none() {
            o.broadcasts_to_decision += 1;
        }
        let n = self.world.cfg.protocol.params.n;
        let copies: Vec<(ProcessId, Arc<Envelope>)> = match self.world.cfg.faults.get(&p) {
            Some(&b) if b != Behavior::N => {
                let node = &mut self.nodes[p.0];
                let mut v: Vec<(ProcessId, Arc<Envelope>)> =
                    apply_behavior(b, &e, &self.world.roster, |x, w| node.restate(x, w))
                        .into_iter()
                        .map(|(q, x)| (q, Arc::new(x)))
                        .collect();
                // the faulty coalition and the sender itself see the original
                let orig = Arc::new(e);
                v.extend(
                    (0..n)
                        .map(ProcessId)
                        .filter(|q| self.world.cfg.is_faulty(*q))
                        .filter(|q| *q == p || b != Behavior::M)
                        .map(|q| (q, orig.clone())),
                );
                // restating signs; charge it to the faulty process
                let extra = self.cost_ns(p);
                self.busy_until[p.0] += extra;
                v
            }
            _ => {
                let shared = Arc::new(e);
                (0..n).map(|q| (ProcessId(q), shared.clone())).collect()
            }
        };
        for (q, env) in copies {
            if q == p {
                self.push(at, q, env);
                continue;
            }
            let o = &mut self.out[p.0];
            o.messages_sent += 1;
            o.bytes_sent += message_size(&env, &self.world.crypto, &self.world.cfg.cost);
            let cfg = &self.world.cfg;
            let mut t = transmit(&env, p, q, at, &cfg.latency, &cfg.scheduler, &mut self.rng);
            if self.world.cfg.scheduler.keeps_fifo() {
                t = t.max(self.last_delivery[p.0][q.0]);
                self.last_delivery[p.0][q.0] = t;
            }
            self.push(t, q, env);
        }
    }

    fn finish(mut self, proposals: &[BinValue]) -> InstanceOutcome {
        for (o, node) in self.out.iter_mut().zip(&self.nodes) {
            o.final_round = node.state().round;
        }
        InstanceOutcome {
            instance: self.instance,
            proposals: proposals.to_vec(),
            nodes: self.out,
            coins: self.coins,
            coin_audit: self.audit,
            events: self.handled,
            end_ns: self.now,
        }
    }
}

#[cfg(test)]
mod tests;
