//! Validity proofs and proofs of decision for the signed algorithms.
//!
//! S1 rule: `v` is valid in round `R` given a certificate on `AUXM(r', v)`
//! with `r' < R` (t+1 signers if `r' = 0`, n-t otherwise) and
//! `coin(k) = v` for every `r' < k < R`.
//!
//! S2 rules: `PRE_VOTE(1, v)` needs t+1 signers on `PRE_VOTE(0, v)`;
//! `PRE_VOTE(R, v)` needs n-t signers on `PRE_VOTE(R-1, v)`, or n-t on
//! `MAIN_VOTE(R-1, ⊥)` with `coin(R-1) = v`; `MAIN_VOTE(R, b)` needs n-t on
//! `PRE_VOTE(R, b)`; `MAIN_VOTE(R, ⊥)` needs pre-vote proofs for both
//! values. S3's round-3 pre-votes are checked with the S1 rule.

use super::{Algorithm, Mode, Node};
use crate::primitives::{CryptoOp, SignatureToken, SignatureType, ThresholdSignatureToken};
use crate::types::{
    AuxValue, BinValue, Envelope, Evidence, MessageKind, MsgValue, QuorumCert, Round,
    SignedStatement, Statement, ValidityProof,
};

use std::collections::BTreeSet;

impl Node {
    fn check_token(&mut self, signer: crate::types::ProcessId, content: &[u8], tok: &SignatureToken) -> bool {
        if tok.signer() != signer {
            return false;
        }
        if self.verified.contains(&tok.cache_key()) {
            return *tok.digest() == crate::primitives::content_digest(content);
        }
        self.ops.push(CryptoOp::Verify);
        let ok = self.verifier.verify(signer, content, tok);
        if ok {
            self.verified.insert(tok.cache_key());
        }
        ok
    }

    fn check_threshold(&mut self, content: &[u8], tok: &ThresholdSignatureToken) -> bool {
        if self.verified.contains(&tok.cache_key()) {
            return *tok.digest() == crate::primitives::content_digest(content);
        }
        self.ops.push(CryptoOp::Verify);
        let ok = self.verifier.verify_threshold(content, tok);
        if ok {
            self.verified.insert(tok.cache_key());
        }
        ok
    }

    /// Checks the sender's signature; returns the signed statement.
    pub(super) fn check_envelope_sig(&mut self, env: &Envelope) -> Option<SignedStatement> {
        let statement = env.statement()?;
        let sig = env.sig.as_ref()?;
        if sig.scheme() != self.msg_scheme(env.round) {
            return None;
        }
        self.check_token(env.sender, &statement.canonical_bytes(), sig)
            .then(|| SignedStatement {
                statement,
                sig: sig.clone(),
            })
    }

    /// Whether `entry` signs `kind(round, value)`, directly or as a
    /// follow-coin statement resolving to `value`.
    fn entry_resolves(&self, st: &Statement, kind: MessageKind, round: Round, value: AuxValue) -> bool {
        st.instance == self.instance
            && st.kind == kind
            && st.round == round
            && match st.value {
                MsgValue::Aux(a) => a == value,
                MsgValue::FollowCoin => {
                    round >= 2 && value.binary() == Some(self.coin_oracle(round - 1))
                }
            }
    }

    pub(super) fn cert_ok(&mut self, cert: &QuorumCert, kind: MessageKind, round: Round, value: AuxValue, need: usize) -> bool {
        if cert.kind != kind || cert.round != round || cert.value != value {
            return false;
        }
        match &cert.evidence {
            Evidence::Threshold { statement, token } => {
                let expected = Statement {
                    instance: self.instance,
                    round,
                    kind,
                    value: MsgValue::Aux(value),
                };
                *statement == expected
                    && token.scheme().threshold(self.params()).is_some_and(|t| t >= need)
                    && self.check_threshold(&statement.canonical_bytes(), token)
            }
            Evidence::SigSet { entries } => {
                let signers: BTreeSet<_> = entries.iter().map(|e| e.sig.signer()).collect();
                if signers.len() < need || signers.len() != entries.len() {
                    return false;
                }
                entries.iter().all(|e| {
                    self.entry_resolves(&e.statement, kind, round, value)
                        && self.check_token(e.sig.signer(), &e.statement.canonical_bytes(), &e.sig)
                })
            }
        }
    }

    fn s1_need(&self, r: Round) -> usize {
        if r == 0 {
            self.params().quorum_small
        } else {
            self.params().quorum_large
        }
    }

    /// S1 rule for `v` valid in round `big_r`.
    fn s1_value_ok(&mut self, proof: &ValidityProof, big_r: Round, v: BinValue) -> bool {
        let ValidityProof::Quorum(cert) = proof else {
            return false;
        };
        let r0 = cert.round;
        if r0 >= big_r || (r0 + 1..big_r).any(|k| self.coin_oracle(k) != v) {
            return false;
        }
        let need = self.s1_need(r0);
        self.cert_ok(cert, MessageKind::Auxm, r0, v.into(), need)
    }

    fn prevote_ok(&mut self, proof: &ValidityProof, big_r: Round, v: BinValue) -> bool {
        if self.cfg.algorithm == Algorithm::S3 && big_r == 3 {
            return self.s1_value_ok(proof, big_r, v);
        }
        let ValidityProof::Quorum(cert) = proof else {
            return false;
        };
        let (small, large) = (self.params().quorum_small, self.params().quorum_large);
        if big_r == 1 {
            return self.cert_ok(cert, MessageKind::PreVote, 0, v.into(), small);
        }
        match cert.kind {
            MessageKind::PreVote => self.cert_ok(cert, MessageKind::PreVote, big_r - 1, v.into(), large),
            MessageKind::MainVote => {
                self.coin_oracle(big_r - 1) == v
                    && self.cert_ok(cert, MessageKind::MainVote, big_r - 1, AuxValue::Bot, large)
            }
            _ => false,
        }
    }

    /// Validates the proof on a consensus envelope whose value resolves to
    /// `resolved`. `None` means invalid; `Some(p)` carries the proof that
    /// covers `resolved` (absent for round-0 proposals).
    pub(super) fn check_message_proof(&mut self, env: &Envelope, resolved: AuxValue) -> Option<Option<ValidityProof>> {
        let r = env.round;
        if r == 0 {
            return resolved.binary().map(|_| None);
        }
        let proof = env.proof.as_ref()?;
        let follow = env.value == Some(MsgValue::FollowCoin);
        let effective = match (resolved.binary(), follow) {
            (Some(b), true) => proof.for_value(b),
            _ => proof,
        };
        let ok = match (env.kind, resolved.binary()) {
            (MessageKind::Auxm, Some(v)) => self.s1_value_ok(effective, r, v),
            (MessageKind::PreVote, Some(v)) => self.prevote_ok(effective, r, v),
            (MessageKind::MainVote, Some(b)) => match effective {
                ValidityProof::Quorum(c) => {
                    let large = self.params().quorum_large;
                    self.cert_ok(c, MessageKind::PreVote, r, b.into(), large)
                }
                _ => false,
            },
            (MessageKind::MainVote, None) => match effective {
                ValidityProof::Dual { zero, one } => {
                    self.prevote_ok(zero, r, BinValue::Zero) && self.prevote_ok(one, r, BinValue::One)
                }
                _ => false,
            },
            _ => false,
        };
        ok.then(|| Some(effective.clone()))
    }

    /// Threshold certificate when every counted signer signed the same
    /// statement, signature set otherwise.
    pub(super) fn build_cert(&mut self, r: Round, kind: MessageKind, v: AuxValue, need: usize) -> Option<ValidityProof> {
        if let Some(p) = self.round(r).and_then(|rs| rs.certs.get(&(kind, v))) {
            return Some(p.clone());
        }
        let entries: Vec<SignedStatement> = self
            .round(r)?
            .votes
            .get(&kind)?
            .get(&v)?
            .values()
            .filter_map(|vote| vote.signed.clone())
            .collect();
        if entries.len() < need {
            return None;
        }
        let mut evidence = None;
        if self.cfg.signature == SignatureType::ThresholdBls {
            let statement = Statement {
                instance: self.instance,
                round: r,
                kind,
                value: MsgValue::Aux(v),
            };
            let shares: Vec<SignatureToken> = entries
                .iter()
                .filter(|e| e.statement == statement)
                .map(|e| e.sig.clone())
                .collect();
            if shares.len() >= need {
                if let Ok(token) = self.verifier.combine(&shares, self.msg_scheme(r)) {
                    evidence = Some(Evidence::Threshold { statement, token });
                }
            }
        }
        let evidence = evidence.unwrap_or_else(|| Evidence::SigSet {
            entries: entries.into_iter().take(need).collect(),
        });
        let proof = ValidityProof::Quorum(QuorumCert {
            kind,
            round: r,
            value: v,
            evidence,
        });
        self.round_mut(r).certs.insert((kind, v), proof.clone());
        Some(proof)
    }

    /// Proof carried by any counted `kind(r, v)`.
    pub(super) fn some_proof(&self, r: Round, kind: MessageKind, v: AuxValue) -> Option<ValidityProof> {
        self.round(r)?
            .votes
            .get(&kind)?
            .get(&v)?
            .values()
            .find_map(|vote| vote.proof.clone())
    }

    pub(super) fn dual(&self, r: Round, kind: MessageKind) -> Option<ValidityProof> {
        Some(ValidityProof::Dual {
            zero: Box::new(self.some_proof(r, kind, AuxValue::Zero)?),
            one: Box::new(self.some_proof(r, kind, AuxValue::One)?),
        })
    }

    /// Proof that `v` is valid for the first message of round `big_r` in
    /// S1 mode, from this process's own state.
    pub(super) fn s1_proof(&mut self, big_r: Round, v: BinValue) -> Option<ValidityProof> {
        let prev = big_r.checked_sub(1)?;
        let need = self.s1_need(prev);
        if let Some(p) = self.build_cert(prev, MessageKind::Auxm, v.into(), need) {
            return Some(p);
        }
        if prev >= 1 && self.coin_known(prev) == Some(v) {
            return self.some_proof(prev, MessageKind::Auxm, v.into());
        }
        None
    }

    pub(super) fn build_proof(&mut self, kind: MessageKind, r: Round, value: AuxValue) -> Option<ValidityProof> {
        if r == 0 {
            return None;
        }
        if let Some(p) = self.some_proof(r, kind, value) {
            return Some(p);
        }
        let (small, large) = (self.params().quorum_small, self.params().quorum_large);
        match (kind, value.binary()) {
            (MessageKind::Auxm, Some(v)) => self.s1_proof(r, v),
            (MessageKind::PreVote, Some(v)) => {
                if self.cfg.algorithm == Algorithm::S3 && r == 3 {
                    self.s1_proof(r, v)
                } else if r == 1 {
                    self.build_cert(0, MessageKind::PreVote, value, small)
                } else {
                    self.build_cert(r - 1, MessageKind::PreVote, value, large).or_else(|| {
                        if self.coin_known(r - 1) == Some(v) {
                            self.build_cert(r - 1, MessageKind::MainVote, AuxValue::Bot, large)
                        } else {
                            None
                        }
                    })
                }
            }
            (MessageKind::MainVote, Some(_)) => self.build_cert(r, MessageKind::PreVote, value, large),
            (MessageKind::MainVote, None) => self.dual(r, MessageKind::PreVote),
            _ => None,
        }
    }

    // ---- proofs of decision ----

    pub(super) fn broadcast_pod(&mut self, value: BinValue, round: Round) {
        let large = self.params().quorum_large;
        let kind = match self.mode(round) {
            Mode::S1 => MessageKind::Auxm,
            _ => MessageKind::MainVote,
        };
        let proof = if self.cfg.include_proofs {
            self.build_cert(round, kind, value.into(), large)
        } else {
            None
        };
        let mut e = Envelope::new(self.me, self.instance, round, MessageKind::ProofOfDecision, Some(MsgValue::bin(value)));
        e.proof = proof;
        e.sig = Some(self.sign_statement(&e));
        self.account_send();
        self.out.push(super::Action::Broadcast(e));
    }

    pub(super) fn receive_pod(&mut self, env: &Envelope) {
        if !self.cfg.algorithm.is_signed() || self.st.decided.is_some() {
            return;
        }
        let Some(MsgValue::Aux(value)) = env.value else { return };
        let Some(b) = value.binary() else { return };
        let r = env.round;
        if r == 0 || r > self.cfg.round_cap + 2 {
            return;
        }
        if !self.cfg.include_proofs {
            if self.check_envelope_sig(env).is_some() {
                self.decide(b, r);
            }
            return;
        }
        let Some(ValidityProof::Quorum(cert)) = &env.proof else { return };
        let large = self.params().quorum_large;
        let ok = match self.mode(r) {
            Mode::S1 => self.coin_oracle(r) == b && self.cert_ok(cert, MessageKind::Auxm, r, value, large),
            _ => self.cert_ok(cert, MessageKind::MainVote, r, value, large),
        };
        if ok {
            self.decide(b, r);
        }
    }
}
