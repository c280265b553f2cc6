//! Round logic of the signature-free algorithms (NS1 and NS2 modes).
//!
//! Values enter a round through a reliable-broadcast style filter: a value
//! is echoed once `t + 1` processes sent it and becomes valid once `n - t`
//! did. Votes count only when their value is valid locally.
//!
//! Processes in this family never terminate. A decided process stops at the
//! end of a round after which no correct process can need its messages, and
//! resumes if later deliveries show otherwise.

use std::collections::BTreeSet;

use super::{Algorithm, Mode, Node};
use crate::types::{AuxValue, BinValue, MessageKind, MsgValue, Round};

const BIN_PREF: [BinValue; 2] = [BinValue::One, BinValue::Zero];
const AUX_PREF: [AuxValue; 3] = [AuxValue::One, AuxValue::Zero, AuxValue::Bot];

impl Node {
    fn valid(&self, r: Round, kind: MessageKind, v: AuxValue) -> bool {
        let Some(rs) = self.round(r) else {
            return false;
        };
        match kind {
            MessageKind::Auxm | MessageKind::AuxStage1 => v.binary().is_some_and(|b| rs.bin.contains(&b)),
            MessageKind::AuxBoth => match v.binary() {
                Some(b) => rs.bin.contains(&b),
                None => rs.bin.len() == 2,
            },
            MessageKind::AuxStage2 => rs.bin2.contains(&v),
            _ => true,
        }
    }

    fn count_valid(&self, r: Round, kind: MessageKind, v: AuxValue) -> usize {
        if self.valid(r, kind, v) {
            self.count(r, kind, v)
        } else {
            0
        }
    }

    fn valid_senders(&self, r: Round, kind: MessageKind) -> usize {
        let Some(t) = self.round(r).and_then(|rs| rs.tally(kind)) else {
            return 0;
        };
        t.iter()
            .filter(|(v, _)| self.valid(r, kind, **v))
            .flat_map(|(_, s)| s.keys())
            .collect::<BTreeSet<_>>()
            .len()
    }

    fn valid_values(&self, r: Round, kind: MessageKind) -> BTreeSet<AuxValue> {
        AUX_PREF
            .into_iter()
            .filter(|v| self.count_valid(r, kind, *v) > 0)
            .collect()
    }

    fn pick_bin(&self, r: Round) -> Option<BinValue> {
        let bin = &self.round(r)?.bin;
        let order = if self.cfg.prefer_one { BIN_PREF } else { [BinValue::Zero, BinValue::One] };
        order.into_iter().find(|b| bin.contains(b))
    }

    pub(super) fn refresh_bins(&mut self) -> bool {
        let large = self.params().quorum_large;
        let rounds: Vec<Round> = self.st.rounds.keys().copied().filter(|r| *r >= 1).collect();
        let mut changed = false;
        for r in rounds {
            let mut add1 = Vec::new();
            let mut add2 = Vec::new();
            match self.mode(r) {
                Mode::Ns1 => {
                    add1.extend(BIN_PREF.into_iter().filter(|b| self.count(r, MessageKind::SVal, (*b).into()) >= large));
                    // processes whose estimate equals the previous coin skip S_VAL
                    if r >= 2 && self.mode(r - 1) == Mode::Ns1 {
                        if let Some(c) = self.coin_known(r - 1) {
                            if self.round(r - 1).is_some_and(|p| p.bin.contains(&c)) {
                                add1.push(c);
                            }
                        }
                    }
                }
                _ => {
                    add1.extend(BIN_PREF.into_iter().filter(|b| self.count(r, MessageKind::SValS1, (*b).into()) >= large));
                    add2.extend(AUX_PREF.into_iter().filter(|v| self.count(r, MessageKind::SValS2, *v) >= large));
                }
            }
            let rs = self.round_mut(r);
            for b in add1 {
                changed |= rs.bin.insert(b);
            }
            for v in add2 {
                changed |= rs.bin2.insert(v);
            }
        }
        changed
    }

    pub(super) fn echo(&mut self) -> bool {
        let small = self.params().quorum_small;
        let rounds: Vec<Round> = self.live_rounds();
        let mut changed = false;
        for r in rounds {
            let kinds: &[MessageKind] = match self.mode(r) {
                Mode::Ns1 => &[MessageKind::SVal],
                _ => &[MessageKind::SValS1, MessageKind::SValS2],
            };
            for &kind in kinds {
                for v in AUX_PREF {
                    if v.is_bot() && !kind.permits_bot() {
                        continue;
                    }
                    let m = MsgValue::Aux(v);
                    if self.count(r, kind, v) >= small && !self.has_sent(r, kind, m) {
                        self.send(r, kind, m, None);
                        changed = true;
                    }
                }
            }
        }
        changed
    }

    pub(super) fn check_decisions_unsigned(&mut self) -> bool {
        if self.st.decided.is_some() {
            return false;
        }
        let large = self.params().quorum_large;
        let rounds: Vec<Round> = self.live_rounds();
        for r in rounds {
            let hit = match self.mode(r) {
                Mode::Ns1 => self
                    .coin_known(r)
                    .filter(|c| self.count_valid(r, MessageKind::Auxm, (*c).into()) >= large),
                _ => BIN_PREF
                    .into_iter()
                    .find(|b| self.count_valid(r, MessageKind::AuxStage2, (*b).into()) >= large),
            };
            if let Some(b) = hit {
                self.decide(b, r);
                return true;
            }
        }
        false
    }

    pub(super) fn step_unsigned(&mut self) -> bool {
        if let Some(k) = self.st.parked {
            if self.should_park(k) {
                return false;
            }
            self.st.parked = None;
            let est = self.st.estimate;
            self.enter_round(k + 1, est, None);
            return true;
        }
        let r = self.st.round;
        match self.mode(r) {
            Mode::Ns1 => self.step_ns1(r),
            _ => self.step_ns2(r),
        }
    }

    fn should_park(&self, k: Round) -> bool {
        let Some((b, dr)) = self.st.decided else {
            return false;
        };
        let bin_has_other = self.round(k).is_some_and(|rs| rs.bin.contains(&!b));
        match self.mode(k) {
            Mode::Ns1 => self.coin_known(k) == Some(b) && !bin_has_other,
            _ => {
                let first = if self.cfg.algorithm == Algorithm::NS3 { 3 } else { 1 };
                let base = dr.max(first - 1);
                k > base || !bin_has_other
            }
        }
    }

    fn finish_round(&mut self, r: Round, est: BinValue) {
        self.round_mut(r).finished = true;
        self.st.estimate = est;
        if self.should_park(r) {
            self.st.parked = Some(r);
        } else {
            self.enter_round(r + 1, est, None);
        }
    }

    fn step_ns1(&mut self, r: Round) -> bool {
        let large = self.params().quorum_large;
        let Some(rs) = self.round(r) else {
            return false;
        };
        let (aux_sent, requested, finished) = (rs.aux_sent, rs.coin_requested, rs.finished);
        if !aux_sent {
            let Some(w) = self.pick_bin(r) else {
                return false;
            };
            self.round_mut(r).aux_sent = true;
            self.send(r, MessageKind::Auxm, MsgValue::bin(w), None);
            return true;
        }
        if !requested {
            if self.valid_senders(r, MessageKind::Auxm) < large {
                return false;
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
        let est = BIN_PREF
            .into_iter()
            .find(|v| self.count_valid(r, MessageKind::Auxm, (*v).into()) >= large)
            .unwrap_or(c);
        self.finish_round(r, est);
        true
    }

    fn step_ns2(&mut self, r: Round) -> bool {
        let large = self.params().quorum_large;
        let Some(rs) = self.round(r) else {
            return false;
        };
        if !rs.aux_sent {
            let Some(w) = self.pick_bin(r) else {
                return false;
            };
            self.round_mut(r).aux_sent = true;
            self.send(r, MessageKind::AuxStage1, MsgValue::bin(w), None);
            return true;
        }
        if !rs.mid_sent {
            if self.valid_senders(r, MessageKind::AuxStage1) < large {
                return false;
            }
            let v = match rs.bin.iter().collect::<Vec<_>>().as_slice() {
                [b] => AuxValue::from(**b),
                _ => AuxValue::Bot,
            };
            self.round_mut(r).mid_sent = true;
            self.send(r, MessageKind::AuxBoth, MsgValue::Aux(v), None);
            return true;
        }
        if !rs.stage2_sent {
            if self.valid_senders(r, MessageKind::AuxBoth) < large {
                return false;
            }
            let vals = self.valid_values(r, MessageKind::AuxStage1);
            let est2 = match vals.iter().collect::<Vec<_>>().as_slice() {
                [v] => **v,
                _ => AuxValue::Bot,
            };
            self.round_mut(r).stage2_sent = true;
            let m = MsgValue::Aux(est2);
            if !self.has_sent(r, MessageKind::SValS2, m) {
                self.send(r, MessageKind::SValS2, m, None);
            }
            return true;
        }
        if !rs.aux2_sent {
            let Some(w) = AUX_PREF.into_iter().find(|v| rs.bin2.contains(v)) else {
                return false;
            };
            self.round_mut(r).aux2_sent = true;
            self.send(r, MessageKind::AuxStage2, MsgValue::Aux(w), None);
            return true;
        }
        if rs.finished || self.valid_senders(r, MessageKind::AuxStage2) < large {
            return false;
        }
        let requested = rs.coin_requested;
        let undecided = self.st.decided.is_none();
        let binary = BIN_PREF
            .into_iter()
            .find(|b| self.count_valid(r, MessageKind::AuxStage2, (*b).into()) > 0);
        if !requested {
            self.round_mut(r).coin_requested = true;
            if undecided {
                self.request_coin(r);
            }
            if binary.is_none() {
                return true;
            }
        }
        let est = match binary.or_else(|| self.coin_known(r)) {
            Some(b) => b,
            None => return false,
        };
        self.finish_round(r, est);
        true
    }
}
