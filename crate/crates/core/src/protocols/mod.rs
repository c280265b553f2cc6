//! The six consensus algorithms behind one driver contract.
//!
//! A [`Node`] is the state machine of one process in one consensus
//! instance. [`Node::init`] starts it with a proposal and [`Node::handle`]
//! feeds it one delivered envelope; both return the [`Action`]s produced by
//! that transition. Coin shares, echoes, and reveals are handled inside the
//! node, so the driver only moves envelopes.
//!
//! Internally each round runs in one of four modes. S3 runs S1 rules in
//! rounds 1 and 2 and S2 rules afterwards; NS3 does the same with NS1 and
//! NS2.

mod proofs;
mod signed;
mod unsigned;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coins::{coin_value, is_preset_round, CoinConfig, CoinContext, CoinOutput, CoinScheme, CoinState};
use crate::error::{Error, Result};
use crate::primitives::{
    CryptoConfig, CryptoOp, Digest, SigScheme, SignatureType, Signer, ThresholdKind,
    TrustedSetup, Verifier,
};
use crate::types::{
    AuxValue, BinValue, DedupKey, Envelope, InstanceId, MessageKind, MsgValue, ProcessId,
    Round, SignedStatement, SystemParams, ValidityProof,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Algorithm {
    S1,
    S2,
    S3,
    NS1,
    NS2,
    NS3,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::S1,
        Algorithm::S2,
        Algorithm::S3,
        Algorithm::NS1,
        Algorithm::NS2,
        Algorithm::NS3,
    ];

    pub fn is_signed(self) -> bool {
        matches!(self, Algorithm::S1 | Algorithm::S2 | Algorithm::S3)
    }

    /// S3 and NS3 always use the preset coin in rounds 1 and 2.
    pub fn forces_presets(self) -> bool {
        matches!(self, Algorithm::S3 | Algorithm::NS3)
    }

    pub fn default_coin_threshold(self) -> ThresholdKind {
        match self {
            Algorithm::NS2 | Algorithm::NS3 => ThresholdKind::Small,
            _ => ThresholdKind::Large,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::S1 => "S1",
            Algorithm::S2 => "S2",
            Algorithm::S3 => "S3",
            Algorithm::NS1 => "NS1",
            Algorithm::NS2 => "NS2",
            Algorithm::NS3 => "NS3",
        }
    }

    pub(crate) fn mode(self, round: Round) -> Mode {
        match self {
            Algorithm::S1 => Mode::S1,
            Algorithm::S2 => Mode::S2,
            Algorithm::S3 if round <= 2 => Mode::S1,
            Algorithm::S3 => Mode::S2,
            Algorithm::NS1 => Mode::Ns1,
            Algorithm::NS2 => Mode::Ns2,
            Algorithm::NS3 if round <= 2 => Mode::Ns1,
            Algorithm::NS3 => Mode::Ns2,
        }
    }

    /// Message kinds this algorithm ever accepts.
    pub fn accepts(self, kind: MessageKind) -> bool {
        use MessageKind::*;
        if kind.is_coin() {
            return true;
        }
        let s1 = matches!(kind, Auxm | ProofOfDecision);
        let s2 = matches!(kind, PreVote | MainVote | ProofOfDecision);
        let ns1 = matches!(kind, SVal | Auxm);
        let ns2 = matches!(kind, SValS1 | AuxStage1 | AuxBoth | SValS2 | AuxStage2);
        match self {
            Algorithm::S1 => s1,
            Algorithm::S2 => s2,
            Algorithm::S3 => s1 || s2,
            Algorithm::NS1 => ns1,
            Algorithm::NS2 => ns2,
            Algorithm::NS3 => ns1 || ns2,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase();
        let key = key.strip_prefix("BC:").unwrap_or(&key);
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| Error::Parse(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    S1,
    S2,
    Ns1,
    Ns2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub algorithm: Algorithm,
    pub params: SystemParams,
    pub coin: CoinConfig,
    pub signature: SignatureType,
    pub include_proofs: bool,
    pub encrypt_channels: bool,
    pub combine_coin: bool,
    pub prefer_one: bool,
    /// Messages for rounds beyond `round_cap + 2` are dropped.
    pub round_cap: Round,
}

impl ProtocolConfig {
    /// Default configuration for `algorithm` on `n` processes: TC coin at
    /// the algorithm's threshold, no presets, no combined coin messages,
    /// threshold-BLS with proofs for the signed algorithms, encrypted
    /// channels for the others.
    pub fn new(algorithm: Algorithm, n: usize) -> Result<Self> {
        let params = SystemParams::new(n)?;
        let signed = algorithm.is_signed();
        Ok(ProtocolConfig {
            algorithm,
            params,
            coin: CoinConfig::new(CoinScheme::Tc, algorithm.default_coin_threshold(), false, 0),
            signature: if signed {
                SignatureType::ThresholdBls
            } else {
                SignatureType::None
            },
            include_proofs: signed,
            encrypt_channels: !signed,
            combine_coin: false,
            prefer_one: true,
            round_cap: 50,
        })
    }

    /// Switches the coin scheme. PC-based coins pair with EDDSA signatures
    /// and signature-set proofs on the signed algorithms.
    pub fn with_coin_scheme(mut self, scheme: CoinScheme) -> Self {
        self.coin = CoinConfig::new(scheme, self.coin.threshold, self.coin.presets, self.coin.seed);
        if self.algorithm.is_signed() {
            self.signature = match scheme.implementation() {
                crate::primitives::CoinImpl::Pc => SignatureType::Eddsa,
                crate::primitives::CoinImpl::Tc => SignatureType::ThresholdBls,
            };
        }
        self
    }

    pub fn with_coin_threshold(mut self, threshold: ThresholdKind) -> Self {
        self.coin = CoinConfig::new(self.coin.scheme, threshold, self.coin.presets, self.coin.seed);
        self
    }

    pub fn with_presets(mut self, presets: bool) -> Self {
        self.coin.presets = presets;
        self
    }

    pub fn with_coin_seed(mut self, seed: u64) -> Self {
        self.coin.seed = seed;
        self
    }

    pub fn with_combine_coin(mut self, on: bool) -> Self {
        self.combine_coin = on;
        self
    }

    pub fn with_include_proofs(mut self, on: bool) -> Self {
        self.include_proofs = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.params != SystemParams::new(self.params.n)? {
            return Err(Error::Config("inconsistent system parameters".into()));
        }
        let signed = self.algorithm.is_signed();
        if signed && self.signature == SignatureType::None {
            return Err(Error::Config(format!("{} requires signatures", self.algorithm)));
        }
        if !signed && self.signature != SignatureType::None {
            return Err(Error::Config(format!("{} does not sign messages", self.algorithm)));
        }
        if !signed && self.include_proofs {
            return Err(Error::Config(format!("{} carries no validity proofs", self.algorithm)));
        }
        if self.combine_coin && !signed {
            return Err(Error::Config(
                "combined coin messages need a signed algorithm".into(),
            ));
        }
        if !self.prefer_one {
            return Err(Error::Config("preference toward 1 is fixed".into()));
        }
        if self.round_cap == 0 {
            return Err(Error::Config("round cap must be positive".into()));
        }
        Ok(())
    }

    pub fn crypto(&self) -> CryptoConfig {
        CryptoConfig {
            signature: self.signature,
            coin: self.coin.scheme.implementation(),
            coin_threshold: self.coin.threshold,
            encrypt_channels: self.encrypt_channels,
        }
    }

    fn preset(&self, round: Round) -> bool {
        is_preset_round(round) && (self.coin.presets || self.algorithm.forces_presets())
    }
}

/// Output of one transition.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Broadcast(Envelope),
    Decide { value: BinValue, round: Round },
    /// The process reached the coin point of `round`.
    RequestCoinShare(Round),
    /// The process learned the coin of `round` from shares.
    RevealCoin { round: Round, value: BinValue },
    Terminate,
}

/// A counted message with its resolved value.
#[derive(Clone, Debug)]
pub struct Vote {
    pub value: AuxValue,
    pub signed: Option<SignedStatement>,
    /// Proof that `value` is valid; for follow-coin messages the half of the
    /// dual proof covering the resolved value.
    pub proof: Option<ValidityProof>,
}

type Tally = BTreeMap<AuxValue, BTreeMap<ProcessId, Vote>>;

#[derive(Clone, Debug, Default)]
pub struct RoundState {
    pub votes: BTreeMap<MessageKind, Tally>,
    /// Follow-coin messages waiting for the previous round's coin.
    pub held: Vec<Envelope>,
    /// Consensus messages this process broadcast in the round.
    pub sent: BTreeSet<(MessageKind, MsgValue)>,
    /// NS1 valid values, or NS2 stage-1 valid values.
    pub bin: BTreeSet<BinValue>,
    /// NS2 stage-2 valid values.
    pub bin2: BTreeSet<AuxValue>,
    pub entered: bool,
    pub aux_sent: bool,
    pub mid_sent: bool,
    pub stage2_sent: bool,
    pub aux2_sent: bool,
    pub coin_requested: bool,
    pub finished: bool,
    /// First message of the next round, merged with this round's share.
    pub next: Option<Envelope>,
    certs: BTreeMap<(MessageKind, AuxValue), ValidityProof>,
}

impl RoundState {
    pub fn tally(&self, kind: MessageKind) -> Option<&Tally> {
        self.votes.get(&kind)
    }

    pub fn count(&self, kind: MessageKind, v: AuxValue) -> usize {
        self.votes
            .get(&kind)
            .and_then(|t| t.get(&v))
            .map_or(0, |s| s.len())
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolState {
    pub round: Round,
    pub estimate: BinValue,
    pub rounds: BTreeMap<Round, RoundState>,
    pub coins: BTreeMap<Round, CoinState>,
    pub decided: Option<(BinValue, Round)>,
    pub terminated: bool,
    /// NS family: round at whose end a decided process stopped.
    pub parked: Option<Round>,
}

pub struct Node {
    cfg: ProtocolConfig,
    me: ProcessId,
    instance: InstanceId,
    signer: Signer,
    verifier: Verifier,
    coin: CoinContext,
    st: ProtocolState,
    seen: BTreeSet<DedupKey>,
    verified: BTreeSet<Digest>,
    ops: Vec<CryptoOp>,
    out: Vec<Action>,
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Node")
            .field("me", &self.me)
            .field("instance", &self.instance)
            .field("round", &self.st.round)
            .field("decided", &self.st.decided)
            .finish()
    }
}

impl Node {
    pub fn new(cfg: ProtocolConfig, me: ProcessId, instance: InstanceId, setup: &TrustedSetup) -> Result<Self> {
        cfg.validate()?;
        if setup.params() != &cfg.params {
            return Err(Error::Config("trusted setup built for a different n".into()));
        }
        let signer = setup.signer(me)?;
        let verifier = setup.verifier();
        let coin = CoinContext::new(cfg.coin, instance, signer.clone(), verifier.clone());
        Ok(Node {
            cfg,
            me,
            instance,
            signer,
            verifier,
            coin,
            st: ProtocolState {
                round: 0,
                estimate: BinValue::Zero,
                rounds: BTreeMap::new(),
                coins: BTreeMap::new(),
                decided: None,
                terminated: false,
                parked: None,
            },
            seen: BTreeSet::new(),
            verified: BTreeSet::new(),
            ops: Vec::new(),
            out: Vec::new(),
        })
    }

    pub fn id(&self) -> ProcessId {
        self.me
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    pub fn state(&self) -> &ProtocolState {
        &self.st
    }

    pub fn decided(&self) -> Option<(BinValue, Round)> {
        self.st.decided
    }

    pub fn terminated(&self) -> bool {
        self.st.terminated
    }

    /// Crypto operations performed since the last call, for CPU accounting.
    pub fn drain_ops(&mut self) -> Vec<CryptoOp> {
        std::mem::take(&mut self.ops)
    }

    /// Starts the instance with `proposal`.
    pub fn init(&mut self, proposal: BinValue) -> Vec<Action> {
        self.st.estimate = proposal;
        let v = MsgValue::bin(proposal);
        if self.cfg.algorithm.is_signed() {
            let kind = match self.mode(0) {
                Mode::S1 => MessageKind::Auxm,
                _ => MessageKind::PreVote,
            };
            self.round_mut(0).entered = true;
            self.send(0, kind, v, None);
        } else {
            self.enter_round(1, proposal, None);
        }
        self.progress();
        std::mem::take(&mut self.out)
    }

    /// Processes one delivered envelope.
    pub fn handle(&mut self, env: &Envelope) -> Vec<Action> {
        if self.st.terminated || env.instance != self.instance {
            return Vec::new();
        }
        if self.cfg.encrypt_channels && env.sender != self.me {
            self.ops.push(CryptoOp::Decrypt);
        }
        match env.kind {
            MessageKind::CoinShare => {
                self.absorb_share(env);
                if let Some(inner) = &env.piggyback {
                    if inner.sender == env.sender && inner.instance == env.instance {
                        self.receive(inner, true);
                    }
                }
            }
            MessageKind::CoinEcho => self.absorb_echo(env),
            MessageKind::ProofOfDecision => self.receive_pod(env),
            _ => self.receive(env, true),
        }
        self.progress();
        std::mem::take(&mut self.out)
    }

    /// A proof this process could attach to `kind(round, value)`, built
    /// from what it has received. Used by faulty processes that rewrite
    /// their outgoing values.
    pub fn proof_for(&mut self, kind: MessageKind, round: Round, value: AuxValue) -> Option<ValidityProof> {
        if !self.cfg.include_proofs {
            return None;
        }
        self.build_proof(kind, round, value)
    }

    /// Copy of `env` carrying `value`, re-signed by this process with a
    /// proof for the new value when one is available.
    pub fn restate(&mut self, env: &Envelope, value: AuxValue) -> Envelope {
        let mut e = Envelope::new(self.me, env.instance, env.round, env.kind, Some(MsgValue::Aux(value)));
        if self.cfg.algorithm.is_signed() {
            e.proof = if env.value == Some(MsgValue::Aux(value)) {
                env.proof.clone()
            } else {
                self.proof_for(env.kind, env.round, value)
            };
            e.sig = Some(self.sign_statement(&e));
        }
        e
    }

    // ---- shared plumbing ----

    pub(crate) fn mode(&self, round: Round) -> Mode {
        self.cfg.algorithm.mode(round)
    }

    fn params(&self) -> &SystemParams {
        &self.cfg.params
    }

    fn round_mut(&mut self, r: Round) -> &mut RoundState {
        self.st.rounds.entry(r).or_default()
    }

    fn round(&self, r: Round) -> Option<&RoundState> {
        self.st.rounds.get(&r)
    }

    /// Rounds 1 up to the current one that have state.
    fn live_rounds(&self) -> Vec<Round> {
        self.st.rounds.keys().copied().filter(|r| (1..=self.st.round).contains(r)).collect()
    }

    fn count(&self, r: Round, kind: MessageKind, v: AuxValue) -> usize {
        self.round(r).map_or(0, |rs| rs.count(kind, v))
    }

    /// Coin value known locally: preset or revealed from shares.
    pub(crate) fn coin_known(&self, r: Round) -> Option<BinValue> {
        if self.cfg.preset(r) {
            return Some(coin_value(self.cfg.coin.seed, self.instance, r, true));
        }
        self.st.coins.get(&r).and_then(|c| c.revealed)
    }

    /// Coin value as certified by the coin's threshold signature; used only
    /// to check proofs that depend on earlier coins.
    pub(crate) fn coin_oracle(&self, r: Round) -> BinValue {
        coin_value(self.cfg.coin.seed, self.instance, r, self.cfg.preset(r))
    }

    fn msg_scheme(&self, round: Round) -> SigScheme {
        match self.cfg.signature {
            SignatureType::ThresholdBls if round == 0 => SigScheme::ThreshSmall,
            SignatureType::ThresholdBls => SigScheme::ThreshLarge,
            _ => SigScheme::Plain,
        }
    }

    fn sign_statement(&mut self, e: &Envelope) -> crate::primitives::SignatureToken {
        self.ops.push(CryptoOp::Sign);
        let st = e.statement().expect("signed envelopes carry a value");
        self.signer.sign(&st.canonical_bytes(), self.msg_scheme(e.round))
    }

    fn account_send(&mut self) {
        if self.cfg.encrypt_channels {
            let copies = self.params().n - 1;
            self.ops.extend(std::iter::repeat_n(CryptoOp::Encrypt, copies));
        }
    }

    fn make_envelope(&mut self, round: Round, kind: MessageKind, value: MsgValue, proof: Option<ValidityProof>) -> Envelope {
        let mut e = Envelope::new(self.me, self.instance, round, kind, Some(value));
        if self.cfg.algorithm.is_signed() {
            if self.cfg.include_proofs {
                e.proof = proof;
            }
            e.sig = Some(self.sign_statement(&e));
        }
        self.round_mut(round).sent.insert((kind, value));
        e
    }

    fn send(&mut self, round: Round, kind: MessageKind, value: MsgValue, proof: Option<ValidityProof>) {
        let e = self.make_envelope(round, kind, value, proof);
        self.account_send();
        self.out.push(Action::Broadcast(e));
    }

    fn has_sent(&self, round: Round, kind: MessageKind, value: MsgValue) -> bool {
        self.round(round).is_some_and(|rs| rs.sent.contains(&(kind, value)))
    }

    /// Starts round `r` with `est`, sending its opening message unless it
    /// already went out merged with the previous round's coin share.
    fn enter_round(&mut self, r: Round, est: BinValue, proof: Option<ValidityProof>) {
        self.st.round = r;
        self.st.estimate = est;
        if self.round(r).is_some_and(|rs| rs.entered) {
            return;
        }
        self.round_mut(r).entered = true;
        let v = MsgValue::bin(est);
        match self.mode(r) {
            Mode::S1 => self.send(r, MessageKind::Auxm, v, proof),
            Mode::S2 => self.send(r, MessageKind::PreVote, v, proof),
            Mode::Ns1 => {
                let skip = r > 1 && self.coin_known(r - 1) == Some(est);
                if !skip && !self.has_sent(r, MessageKind::SVal, v) {
                    self.send(r, MessageKind::SVal, v, None);
                }
            }
            Mode::Ns2 => {
                if !self.has_sent(r, MessageKind::SValS1, v) {
                    self.send(r, MessageKind::SValS1, v, None);
                }
            }
        }
    }

    fn decide(&mut self, value: BinValue, round: Round) {
        if self.st.decided.is_some() {
            return;
        }
        self.st.decided = Some((value, round));
        self.out.push(Action::Decide { value, round });
        if self.cfg.algorithm.is_signed() {
            self.broadcast_pod(value, round);
            self.st.terminated = true;
            self.out.push(Action::Terminate);
        }
    }

    // ---- coin plumbing ----

    fn request_coin(&mut self, r: Round) {
        if self.cfg.preset(r) {
            return;
        }
        self.out.push(Action::RequestCoinShare(r));
        let mut cs = self.st.coins.remove(&r).unwrap_or_else(|| CoinState::new(r));
        let outputs = self.coin.request(&mut cs, &mut self.ops);
        self.st.coins.insert(r, cs);
        self.coin_outputs(outputs);
    }

    fn absorb_share(&mut self, env: &Envelope) {
        let r = env.round;
        if r == 0 || self.cfg.preset(r) || r > self.cfg.round_cap + 2 {
            return;
        }
        let mut cs = self.st.coins.remove(&r).unwrap_or_else(|| CoinState::new(r));
        let outputs = self.coin.absorb_share(&mut cs, env, &mut self.ops);
        self.st.coins.insert(r, cs);
        self.coin_outputs(outputs);
    }

    fn absorb_echo(&mut self, env: &Envelope) {
        let r = env.round;
        if r == 0 || self.cfg.preset(r) || r > self.cfg.round_cap + 2 {
            return;
        }
        let mut cs = self.st.coins.remove(&r).unwrap_or_else(|| CoinState::new(r));
        let outputs = self.coin.absorb_echo(&mut cs, env, &mut self.ops);
        self.st.coins.insert(r, cs);
        self.coin_outputs(outputs);
    }

    fn coin_outputs(&mut self, outputs: Vec<CoinOutput>) {
        for o in outputs {
            match o {
                CoinOutput::Broadcast(mut e) => {
                    if e.kind == MessageKind::CoinShare {
                        if let Some(next) = self.round_mut(e.round).next.take() {
                            e.piggyback = Some(Box::new(next));
                        }
                    }
                    self.account_send();
                    self.out.push(Action::Broadcast(e));
                }
                CoinOutput::Reveal(round, value) => {
                    self.out.push(Action::RevealCoin { round, value })
                }
            }
        }
    }

    // ---- receive path ----

    fn receive(&mut self, env: &Envelope, fresh: bool) {
        let r = env.round;
        let Some(value) = env.value else { return };
        if !self.cfg.algorithm.accepts(env.kind)
            || env.kind.is_coin()
            || r > self.cfg.round_cap + 2
            || !self.kind_fits_round(env.kind, r)
        {
            return;
        }
        match value {
            MsgValue::Aux(AuxValue::Bot) if !env.kind.permits_bot() => return,
            MsgValue::FollowCoin if !self.cfg.combine_coin || r < 2 => return,
            _ => {}
        }
        if fresh && self.seen.contains(&env.dedup_key()) {
            return;
        }
        let signed = if self.cfg.algorithm.is_signed() {
            match self.check_envelope_sig(env) {
                Some(s) => Some(s),
                None => return,
            }
        } else {
            None
        };
        if fresh {
            self.seen.insert(env.dedup_key());
        }
        let resolved = match value {
            MsgValue::Aux(a) => a,
            MsgValue::FollowCoin => match self.coin_known(r - 1) {
                Some(c) => c.into(),
                None => {
                    self.round_mut(r).held.push(env.clone());
                    return;
                }
            },
        };
        let proof = if self.cfg.include_proofs {
            match self.check_message_proof(env, resolved) {
                Some(p) => p,
                None => return,
            }
        } else {
            None
        };
        let vote = Vote {
            value: resolved,
            signed,
            proof,
        };
        self.round_mut(r)
            .votes
            .entry(env.kind)
            .or_default()
            .entry(resolved)
            .or_default()
            .entry(env.sender)
            .or_insert(vote);
    }

    fn kind_fits_round(&self, kind: MessageKind, r: Round) -> bool {
        use MessageKind::*;
        if r == 0 {
            return match self.cfg.algorithm {
                Algorithm::S1 | Algorithm::S3 => kind == Auxm,
                Algorithm::S2 => kind == PreVote,
                _ => false,
            };
        }
        match self.mode(r) {
            Mode::S1 => kind == Auxm,
            Mode::S2 => matches!(kind, PreVote | MainVote),
            Mode::Ns1 => matches!(kind, SVal | Auxm),
            Mode::Ns2 => matches!(kind, SValS1 | AuxStage1 | AuxBoth | SValS2 | AuxStage2),
        }
    }

    fn release_held(&mut self) -> bool {
        let ready: Vec<Round> = self
            .st
            .rounds
            .iter()
            .filter(|(r, rs)| !rs.held.is_empty() && **r >= 1 && self.coin_known(**r - 1).is_some())
            .map(|(r, _)| *r)
            .collect();
        for r in &ready {
            let held = std::mem::take(&mut self.round_mut(*r).held);
            for e in held {
                self.receive(&e, false);
            }
        }
        !ready.is_empty()
    }

    fn progress(&mut self) {
        for _ in 0..10_000 {
            if self.st.terminated {
                return;
            }
            let mut changed = self.release_held();
            if self.cfg.algorithm.is_signed() {
                changed |= self.check_decisions_signed();
                if self.st.terminated {
                    return;
                }
                changed |= self.step_signed();
            } else {
                changed |= self.refresh_bins();
                changed |= self.echo();
                changed |= self.check_decisions_unsigned();
                changed |= self.step_unsigned();
            }
            if !changed {
                return;
            }
        }
        debug_assert!(false, "transition did not reach a fixpoint");
    }
}
