//! Round logic of the signed algorithms (S1 and S2 modes).

use super::{Mode, Node};
use crate::types::{AuxValue, BinValue, MessageKind, MsgValue, Round, ValidityProof};

impl Node {
    fn senders(&self, r: Round, kind: MessageKind) -> usize {
        let Some(t) = self.round(r).and_then(|rs| rs.tally(kind)) else {
            return 0;
        };
        let mut all: Vec<_> = t.values().flat_map(|m| m.keys().copied()).collect();
        all.sort();
        all.dedup();
        all.len()
    }

    fn quorum_value(&self, r: Round, kind: MessageKind) -> Option<BinValue> {
        let large = self.params().quorum_large;
        [BinValue::One, BinValue::Zero]
            .into_iter()
            .find(|b| self.count(r, kind, (*b).into()) >= large)
    }

    pub(super) fn check_decisions_signed(&mut self) -> bool {
        if self.st.decided.is_some() {
            return false;
        }
        let large = self.params().quorum_large;
        let rounds: Vec<Round> = self.live_rounds();
        for r in rounds {
            let hit = match self.mode(r) {
                Mode::S1 => self
                    .coin_known(r)
                    .filter(|c| self.count(r, MessageKind::Auxm, (*c).into()) >= large),
                _ => self.quorum_value(r, MessageKind::MainVote),
            };
            if let Some(b) = hit {
                self.decide(b, r);
                return true;
            }
        }
        false
    }

    pub(super) fn step_signed(&mut self) -> bool {
        let r = self.st.round;
        if r == 0 {
            return self.step_round_zero();
        }
        match self.mode(r) {
            Mode::S1 => self.step_s1(r),
            _ => self.step_s2(r),
        }
    }

    /// Both signed families open with an unproven proposal; the first
    /// estimate is 1 iff t+1 proposals of 1 were seen.
    fn step_round_zero(&mut self) -> bool {
        let kind = match self.mode(0) {
            Mode::S1 => MessageKind::Auxm,
            _ => MessageKind::PreVote,
        };
        if self.senders(0, kind) < self.params().quorum_large {
            return false;
        }
        let small = self.params().quorum_small;
        let est = if self.count(0, kind, AuxValue::One) >= small {
            BinValue::One
        } else {
            BinValue::Zero
        };
        let proof = if self.cfg.include_proofs {
            self.build_cert(0, kind, est.into(), small)
        } else {
            None
        };
        self.round_mut(0).finished = true;
        self.enter_round(1, est, proof);
        true
    }

    /// Queues the first message of round `r + 1` for merging with the
    /// round-`r` coin share.
    fn stage_next(&mut self, r: Round, value: MsgValue, proof: Option<ValidityProof>) {
        let kind = match self.mode(r + 1) {
            Mode::S1 => MessageKind::Auxm,
            _ => MessageKind::PreVote,
        };
        let e = self.make_envelope(r + 1, kind, value, proof);
        self.round_mut(r + 1).entered = true;
        self.round_mut(r).next = Some(e);
    }

    fn merges_coin(&self, r: Round) -> bool {
        self.cfg.combine_coin && !self.cfg.preset(r)
    }

    fn step_s1(&mut self, r: Round) -> bool {
        let large = self.params().quorum_large;
        let (requested, finished) = self
            .round(r)
            .map_or((false, false), |rs| (rs.coin_requested, rs.finished));
        if !requested {
            if self.senders(r, MessageKind::Auxm) < large {
                return false;
            }
            if self.merges_coin(r) {
                match self.quorum_value(r, MessageKind::Auxm) {
                    Some(v) => {
                        let proof = self.proof_if(|n| n.build_cert(r, MessageKind::Auxm, v.into(), large));
                        self.stage_next(r, MsgValue::bin(v), proof);
                    }
                    None => {
                        let proof = self.proof_if(|n| n.dual(r, MessageKind::Auxm));
                        self.stage_next(r, MsgValue::FollowCoin, proof);
                    }
                }
            }
            self.round_mut(r).coin_requested = true;
            self.request_coin(r);
            return true;
        }
        if finished {
            return false;
        }
        let Some(c) = self.coin_known(r) else {
            return false;
        };
        // the decide rule itself runs in check_decisions_signed
        let (est, proof) = match self.quorum_value(r, MessageKind::Auxm) {
            Some(v) => (v, self.proof_if(|n| n.build_cert(r, MessageKind::Auxm, v.into(), large))),
            None => (c, self.proof_if(|n| n.some_proof(r, MessageKind::Auxm, c.into()))),
        };
        self.round_mut(r).finished = true;
        self.enter_round(r + 1, est, proof);
        true
    }

    fn step_s2(&mut self, r: Round) -> bool {
        let large = self.params().quorum_large;
        let rs = self.round(r).cloned_flags();
        if !rs.mid_sent {
            if self.senders(r, MessageKind::PreVote) < large {
                return false;
            }
            let (value, proof) = match self.quorum_value(r, MessageKind::PreVote) {
                Some(b) => (
                    AuxValue::from(b),
                    self.proof_if(|n| n.build_cert(r, MessageKind::PreVote, b.into(), large)),
                ),
                None => (AuxValue::Bot, self.proof_if(|n| n.dual(r, MessageKind::PreVote))),
            };
            self.round_mut(r).mid_sent = true;
            self.send(r, MessageKind::MainVote, MsgValue::Aux(value), proof);
            return true;
        }
        if !rs.coin_requested {
            if self.senders(r, MessageKind::MainVote) < large {
                return false;
            }
            if self.merges_coin(r) {
                match self.binary_main_vote(r) {
                    Some(b) => {
                        let proof = self.proof_if(|n| n.some_proof(r, MessageKind::MainVote, b.into()));
                        self.stage_next(r, MsgValue::bin(b), proof);
                    }
                    None => {
                        let proof = self.proof_if(|n| n.build_cert(r, MessageKind::MainVote, AuxValue::Bot, large));
                        self.stage_next(r, MsgValue::FollowCoin, proof);
                    }
                }
            }
            self.round_mut(r).coin_requested = true;
            self.request_coin(r);
            return true;
        }
        if rs.finished {
            return false;
        }
        let Some(c) = self.coin_known(r) else {
            return false;
        };
        let staged = self.round(r + 1).is_some_and(|n| n.entered);
        let (est, proof) = match self.binary_main_vote(r) {
            Some(b) if !staged => (b, self.proof_if(|n| n.some_proof(r, MessageKind::MainVote, b.into()))),
            _ => (c, self.proof_if(|n| n.build_cert(r, MessageKind::MainVote, AuxValue::Bot, large))),
        };
        // a merged follow-coin pre-vote already committed to the coin
        let est = if staged {
            match self.round(r + 1).and_then(|n| n.sent.iter().next().map(|(_, v)| *v)) {
                Some(MsgValue::Aux(a)) => a.binary().unwrap_or(c),
                _ => c,
            }
        } else {
            est
        };
        self.round_mut(r).finished = true;
        self.enter_round(r + 1, est, proof);
        true
    }

    /// The binary value among counted main-votes, preferring 1. At most one
    /// can be certified in a round.
    fn binary_main_vote(&self, r: Round) -> Option<BinValue> {
        [BinValue::One, BinValue::Zero]
            .into_iter()
            .find(|b| self.count(r, MessageKind::MainVote, (*b).into()) > 0)
    }

    fn proof_if(&mut self, f: impl FnOnce(&mut Node) -> Option<ValidityProof>) -> Option<ValidityProof> {
        if self.cfg.include_proofs {
            f(self)
        } else {
            None
        }
    }
}

#[derive(Default)]
struct Flags {
    mid_sent: bool,
    coin_requested: bool,
    finished: bool,
}

trait ClonedFlags {
    fn cloned_flags(self) -> Flags;
}

impl ClonedFlags for Option<&super::RoundState> {
    fn cloned_flags(self) -> Flags {
        self.map_or_else(Flags::default, |rs| Flags {
            mid_sent: rs.mid_sent,
            coin_requested: rs.coin_requested,
            finished: rs.finished,
        })
    }
}
