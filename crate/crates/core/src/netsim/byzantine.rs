use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{AuxValue, Envelope, MsgValue, ProcessId};

/// Rewriting applied to a faulty process's own outgoing broadcasts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Behavior {
    /// Both binary values, plus ⊥ where the kind allows it.
    B,
    /// Flipped value, or ⊥ where the kind allows it.
    F,
    /// Normal value to the front half of the roster, flipped to the back.
    H,
    /// 0 to the front half, 1 to the back half.
    HF,
    /// Mute.
    M,
    /// Correct behavior.
    N,
}

impl Behavior {
    pub const ALL: [Behavior; 6] = [Behavior::N, Behavior::B, Behavior::F, Behavior::H, Behavior::HF, Behavior::M];

    pub fn name(self) -> &'static str {
        match self {
            Behavior::B => "B",
            Behavior::F => "F",
            Behavior::H => "H",
            Behavior::HF => "HF",
            Behavior::M => "M",
            Behavior::N => "N",
        }
    }

    /// Whether the behavior ever sends a value it would not send correctly.
    pub fn equivocates(self) -> bool {
        matches!(self, Behavior::B | Behavior::F | Behavior::H | Behavior::HF)
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Behavior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Behavior::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown behavior {s:?}; expected one of B, F, H, HF, M, N")))
    }
}

fn negate(v: AuxValue) -> AuxValue {
    match v {
        AuxValue::Zero => AuxValue::One,
        AuxValue::One => AuxValue::Zero,
        AuxValue::Bot => AuxValue::Bot,
    }
}

/// Values a faulty sender emits in place of `v` toward one roster half.
fn rewrite_values(b: Behavior, e: &Envelope, v: AuxValue, front: bool) -> Vec<AuxValue> {
    match b {
        Behavior::N => vec![v],
        Behavior::M => vec![],
        Behavior::B => {
            let mut vs = vec![AuxValue::Zero, AuxValue::One];
            if e.kind.permits_bot() {
                vs.push(AuxValue::Bot);
            }
            vs
        }
        Behavior::F if e.kind.permits_bot() => vec![AuxValue::Bot],
        Behavior::F => vec![negate(v)],
        Behavior::H if front => vec![v],
        Behavior::H => vec![negate(v)],
        Behavior::HF if front => vec![AuxValue::Zero],
        Behavior::HF => vec![AuxValue::One],
    }
}

/// Consensus envelopes `e` turns into; coin echoes, proofs of decision and
/// follow-coin markers are passed through.
fn rewrite(
    b: Behavior,
    e: &Envelope,
    front: bool,
    restate: &mut impl FnMut(&Envelope, AuxValue) -> Envelope,
) -> Vec<Envelope> {
    if b == Behavior::M {
        return Vec::new();
    }
    match e.value {
        Some(MsgValue::Aux(v)) if e.kind.is_consensus() => rewrite_values(b, e, v, front)
            .into_iter()
            .map(|w| if w == v { e.clone() } else { restate(e, w) })
            .collect(),
        _ => match &e.piggyback {
            Some(inner) => {
                let mut inner_out = rewrite(b, inner, front, restate).into_iter();
                let mut share = e.clone();
                share.piggyback = inner_out.next().map(Box::new);
                std::iter::once(share).chain(inner_out).collect()
            }
            None => vec![e.clone()],
        },
    }
}

/// Per-recipient envelopes for one broadcast of a faulty process. `roster`
/// is the ordered list of non-faulty recipients; its front half is the
/// first `floor(len / 2)` entries. `restate` re-issues an envelope under
/// the faulty sender's identity with a new value.
pub fn apply_behavior(
    b: Behavior,
    e: &Envelope,
    roster: &[ProcessId],
    mut restate: impl FnMut(&Envelope, AuxValue) -> Envelope,
) -> Vec<(ProcessId, Envelope)> {
    let half = roster.len() / 2;
    let front = rewrite(b, e, true, &mut restate);
    let back = if matches!(b, Behavior::H | Behavior::HF) {
        rewrite(b, e, false, &mut restate)
    } else {
        front.clone()
    };
    let mut out = Vec::new();
    for (i, p) in roster.iter().enumerate() {
        let set = if i < half { &front } else { &back };
        out.extend(set.iter().map(|x| (*p, x.clone())));
    }
    out
}
