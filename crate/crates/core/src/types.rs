//! Domain types shared by every protocol and by the simulator: quorum
//! arithmetic, binary and extended values, message kinds, envelopes, and
//! validity proofs.

use std::fmt;
use std::ops::Not;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primitives::{SignatureToken, ThresholdSignatureToken};

pub type Round = u32;
pub type InstanceId = u64;

/// Index of a process in `0..n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProcessId(pub usize);

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// Process count with the derived fault bound and quorum sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: usize,
    pub t: usize,
    /// `t + 1`
    pub quorum_small: usize,
    /// `n - t`
    pub quorum_large: usize,
}

impl SystemParams {
    pub fn new(n: usize) -> Result<Self> {
        thresholds(n)
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (0..self.n).map(ProcessId)
    }
}

/// Largest tolerable fault count `t = floor((n - 1) / 3)` and the two
/// quorum sizes derived from it.
pub fn thresholds(n: usize) -> Result<SystemParams> {
    if n < 4 {
        return Err(Error::Config(format!(
            "n = {n} tolerates no Byzantine process; need n >= 4"
        )));
    }
    let t = (n - 1) / 3;
    Ok(SystemParams {
        n,
        t,
        quorum_small: t + 1,
        quorum_large: n - t,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BinValue {
    Zero,
    One,
}

impl BinValue {
    pub const BOTH: [BinValue; 2] = [BinValue::Zero, BinValue::One];

    pub fn as_u8(self) -> u8 {
        match self {
            BinValue::Zero => 0,
            BinValue::One => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 1 {
            BinValue::One
        } else {
            BinValue::Zero
        }
    }
}

impl Not for BinValue {
    type Output = BinValue;

    fn not(self) -> BinValue {
        match self {
            BinValue::Zero => BinValue::One,
            BinValue::One => BinValue::Zero,
        }
    }
}

impl From<bool> for BinValue {
    fn from(b: bool) -> Self {
        if b {
            BinValue::One
        } else {
            BinValue::Zero
        }
    }
}

impl fmt::Display for BinValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// A binary value or ⊥.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AuxValue {
    Zero,
    One,
    Bot,
}

impl AuxValue {
    pub fn binary(self) -> Option<BinValue> {
        match self {
            AuxValue::Zero => Some(BinValue::Zero),
            AuxValue::One => Some(BinValue::One),
            AuxValue::Bot => None,
        }
    }

    pub fn is_bot(self) -> bool {
        self == AuxValue::Bot
    }

    fn code(self) -> u8 {
        match self {
            AuxValue::Zero => 0,
            AuxValue::One => 1,
            AuxValue::Bot => 2,
        }
    }
}

impl From<BinValue> for AuxValue {
    fn from(b: BinValue) -> Self {
        match b {
            BinValue::Zero => AuxValue::Zero,
            BinValue::One => AuxValue::One,
        }
    }
}

impl fmt::Display for AuxValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuxValue::Bot => write!(f, "⊥"),
            v => write!(f, "{}", v.code()),
        }
    }
}

/// Value carried by a consensus message. `FollowCoin` is the marker sent
/// when the first message of round `r + 1` is combined with the coin share
/// of round `r` before the coin is known; it resolves to `coin(r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MsgValue {
    Aux(AuxValue),
    FollowCoin,
}

impl MsgValue {
    pub fn bin(b: BinValue) -> Self {
        MsgValue::Aux(b.into())
    }

    pub fn aux(self) -> Option<AuxValue> {
        match self {
            MsgValue::Aux(a) => Some(a),
            MsgValue::FollowCoin => None,
        }
    }

    fn code(self) -> u8 {
        match self {
            MsgValue::Aux(a) => a.code(),
            MsgValue::FollowCoin => 3,
        }
    }
}

impl fmt::Display for MsgValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MsgValue::Aux(a) => write!(f, "{a}"),
            MsgValue::FollowCoin => write!(f, "coin"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageKind {
    Auxm,
    PreVote,
    MainVote,
    SVal,
    SValS1,
    AuxStage1,
    SValS2,
    AuxStage2,
    AuxBoth,
    CoinShare,
    CoinEcho,
    ProofOfDecision,
}

impl MessageKind {
    pub const ALL: [MessageKind; 12] = [
        MessageKind::Auxm,
        MessageKind::PreVote,
        MessageKind::MainVote,
        MessageKind::SVal,
        MessageKind::SValS1,
        MessageKind::AuxStage1,
        MessageKind::SValS2,
        MessageKind::AuxStage2,
        MessageKind::AuxBoth,
        MessageKind::CoinShare,
        MessageKind::CoinEcho,
        MessageKind::ProofOfDecision,
    ];

    /// Whether ⊥ is a legal value for this kind.
    pub fn permits_bot(self) -> bool {
        matches!(
            self,
            MessageKind::MainVote
                | MessageKind::SValS2
                | MessageKind::AuxStage2
                | MessageKind::AuxBoth
        )
    }

    pub fn is_coin(self) -> bool {
        matches!(self, MessageKind::CoinShare | MessageKind::CoinEcho)
    }

    pub fn is_consensus(self) -> bool {
        !self.is_coin() && self != MessageKind::ProofOfDecision
    }

    pub fn code(self) -> u8 {
        MessageKind::ALL.iter().position(|k| *k == self).unwrap() as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            MessageKind::Auxm => "AUXM",
            MessageKind::PreVote => "PRE_VOTE",
            MessageKind::MainVote => "MAIN_VOTE",
            MessageKind::SVal => "S_VAL",
            MessageKind::SValS1 => "S_VAL_S1",
            MessageKind::AuxStage1 => "AUX_STAGE1",
            MessageKind::SValS2 => "S_VAL_S2",
            MessageKind::AuxStage2 => "AUX_STAGE2",
            MessageKind::AuxBoth => "AUX_BOTH",
            MessageKind::CoinShare => "COIN_SHARE",
            MessageKind::CoinEcho => "COIN_ECHO",
            MessageKind::ProofOfDecision => "PROOF_OF_DECISION",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The signed content of a consensus message, independent of its sender.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Statement {
    pub instance: InstanceId,
    pub round: Round,
    pub kind: MessageKind,
    pub value: MsgValue,
}

impl Statement {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(18);
        out.extend_from_slice(b"st");
        out.extend_from_slice(&self.instance.to_le_bytes());
        out.extend_from_slice(&self.round.to_le_bytes());
        out.push(self.kind.code());
        out.push(self.value.code());
        out
    }
}

/// One signer's signature over a statement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedStatement {
    pub statement: Statement,
    pub sig: SignatureToken,
}

/// Signatures certifying that a quorum signed `kind(round, value)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Evidence {
    /// One combined threshold signature over a single statement.
    Threshold {
        statement: Statement,
        token: ThresholdSignatureToken,
    },
    /// Individual signatures; statements may differ only in that some
    /// carry `FollowCoin` in place of the value they resolve to.
    SigSet { entries: Vec<SignedStatement> },
}

impl Evidence {
    pub fn signature_count(&self) -> usize {
        match self {
            Evidence::Threshold { .. } => 1,
            Evidence::SigSet { entries } => entries.len(),
        }
    }
}

/// A quorum certificate: evidence that `count` distinct processes signed
/// `kind(round, value)` where `value` is the resolved value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuorumCert {
    pub kind: MessageKind,
    pub round: Round,
    pub value: AuxValue,
    pub evidence: Evidence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProofForm {
    ThresholdSig,
    SigSet,
    Dual,
}

/// Certifies that the value of a message is valid for its round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidityProof {
    Quorum(QuorumCert),
    /// One proof for 0 and one for 1; used on ⊥ and follow-coin messages.
    Dual {
        zero: Box<ValidityProof>,
        one: Box<ValidityProof>,
    },
}

impl ValidityProof {
    pub fn form(&self) -> ProofForm {
        match self {
            ValidityProof::Quorum(QuorumCert {
                evidence: Evidence::Threshold { .. },
                ..
            }) => ProofForm::ThresholdSig,
            ValidityProof::Quorum(_) => ProofForm::SigSet,
            ValidityProof::Dual { .. } => ProofForm::Dual,
        }
    }

    pub fn proven_round(&self) -> Round {
        match self {
            ValidityProof::Quorum(c) => c.round,
            ValidityProof::Dual { zero, one } => zero.proven_round().max(one.proven_round()),
        }
    }

    pub fn proven_value(&self) -> AuxValue {
        match self {
            ValidityProof::Quorum(c) => c.value,
            ValidityProof::Dual { .. } => AuxValue::Bot,
        }
    }

    /// The half of a dual proof that covers `b`; single proofs are returned
    /// unchanged.
    pub fn for_value(&self, b: BinValue) -> &ValidityProof {
        match self {
            ValidityProof::Dual { zero, one } => match b {
                BinValue::Zero => zero,
                BinValue::One => one,
            },
            p => p,
        }
    }
}

/// A consensus, coin, or proof-of-decision message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub sender: ProcessId,
    pub instance: InstanceId,
    pub round: Round,
    pub kind: MessageKind,
    /// Absent for coin shares and echoes.
    pub value: Option<MsgValue>,
    pub proof: Option<ValidityProof>,
    pub sig: Option<SignatureToken>,
    /// Coin share token for `COIN_SHARE`.
    pub payload_hint: Option<SignatureToken>,
    /// First consensus message of the next round, when combined with a
    /// coin share.
    pub piggyback: Option<Box<Envelope>>,
}

impl Envelope {
    pub fn new(
        sender: ProcessId,
        instance: InstanceId,
        round: Round,
        kind: MessageKind,
        value: Option<MsgValue>,
    ) -> Self {
        Envelope {
            sender,
            instance,
            round,
            kind,
            value,
            proof: None,
            sig: None,
            payload_hint: None,
            piggyback: None,
        }
    }

    pub fn statement(&self) -> Option<Statement> {
        self.value.map(|value| Statement {
            instance: self.instance,
            round: self.round,
            kind: self.kind,
            value,
        })
    }

    pub fn dedup_key(&self) -> DedupKey {
        dedup_key(self)
    }

    /// Stable encoding with the fields in declaration order. Tokens and
    /// proofs contribute their presence flag only.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32);
        out.extend_from_slice(&(self.sender.0 as u32).to_le_bytes());
        out.extend_from_slice(&self.instance.to_le_bytes());
        out.extend_from_slice(&self.round.to_le_bytes());
        out.push(self.kind.code());
        out.push(self.value.map(|v| v.code()).unwrap_or(0xff));
        out.push(self.proof.is_some() as u8);
        out.push(self.sig.is_some() as u8);
        out.push(self.payload_hint.is_some() as u8);
        match &self.piggyback {
            Some(inner) => {
                out.push(1);
                out.extend_from_slice(&inner.canonical_bytes());
            }
            None => out.push(0),
        }
        out
    }
}

impl fmt::Display for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}", self.kind, self.round)?;
        if let Some(v) = self.value {
            write!(f, ",{v}")?;
        }
        write!(f, ")")?;
        if let Some(inner) = &self.piggyback {
            write!(f, "+{inner}")?;
        }
        Ok(())
    }
}

/// Receivers count at most one envelope per key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DedupKey {
    pub sender: ProcessId,
    pub instance: InstanceId,
    pub round: Round,
    pub kind: MessageKind,
    pub value: Option<MsgValue>,
}

pub fn dedup_key(e: &Envelope) -> DedupKey {
    DedupKey {
        sender: e.sender,
        instance: e.instance,
        round: e.round,
        kind: e.kind,
        value: e.value,
    }
}
