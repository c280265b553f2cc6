//! Threshold common coins.
//!
//! The coin value is a keyed PRF of `(seed, instance, round)`:
//! the top bit of `SHA-256("coin" || seed_le64 || instance_le64 || round_le32)`.
//! Shares and echoes only gate *when* a process may learn it. With presets,
//! round 1 is fixed to 1 and round 2 to 0 and no coin traffic is generated.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::error::{Error, Result};
use crate::primitives::{CoinImpl, CryptoOp, SigScheme, Signer, ThresholdKind, Verifier};
use crate::types::{BinValue, Envelope, InstanceId, MessageKind, ProcessId, Round, SystemParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CoinScheme {
    Tc,
    Tce,
    Pc,
    Pce,
}

impl CoinScheme {
    pub fn has_echo(self) -> bool {
        matches!(self, CoinScheme::Tce | CoinScheme::Pce)
    }

    pub fn implementation(self) -> CoinImpl {
        match self {
            CoinScheme::Tc | CoinScheme::Tce => CoinImpl::Tc,
            CoinScheme::Pc | CoinScheme::Pce => CoinImpl::Pc,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CoinScheme::Tc => "TC",
            CoinScheme::Tce => "TCE",
            CoinScheme::Pc => "PC",
            CoinScheme::Pce => "PCE",
        }
    }
}

impl std::str::FromStr for CoinScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TC" => Ok(CoinScheme::Tc),
            "TCE" => Ok(CoinScheme::Tce),
            "PC" => Ok(CoinScheme::Pc),
            "PCE" => Ok(CoinScheme::Pce),
            other => Err(Error::Parse(format!("unknown coin scheme {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoinConfig {
    pub scheme: CoinScheme,
    pub threshold: ThresholdKind,
    pub presets: bool,
    pub seed: u64,
}

impl CoinConfig {
    /// Coin quality parameter; only strong coins are modeled.
    pub const D: u32 = 2;

    /// Echo schemes always reveal at `t + 1`.
    pub fn new(scheme: CoinScheme, threshold: ThresholdKind, presets: bool, seed: u64) -> Self {
        let threshold = if scheme.has_echo() {
            ThresholdKind::Small
        } else {
            threshold
        };
        CoinConfig {
            scheme,
            threshold,
            presets,
            seed,
        }
    }

    pub fn threshold_count(&self, params: &SystemParams) -> usize {
        match self.threshold {
            ThresholdKind::Small => params.quorum_small,
            ThresholdKind::Large => params.quorum_large,
        }
    }

    pub fn share_scheme(&self) -> SigScheme {
        match self.threshold {
            ThresholdKind::Small => SigScheme::ThreshSmall,
            ThresholdKind::Large => SigScheme::ThreshLarge,
        }
    }
}

/// Whether `round` has a preset value when presets are on.
pub fn is_preset_round(round: Round) -> bool {
    round == 1 || round == 2
}

pub fn prf_bit(seed: u64, instance: InstanceId, round: Round) -> BinValue {
    let mut h = Sha256::new();
    h.update(b"coin");
    h.update(seed.to_le_bytes());
    h.update(instance.to_le_bytes());
    h.update(round.to_le_bytes());
    BinValue::from_bit(h.finalize()[0] >> 7)
}

pub fn coin_value(seed: u64, instance: InstanceId, round: Round, presets: bool) -> BinValue {
    match (presets, round) {
        (true, 1) => BinValue::One,
        (true, 2) => BinValue::Zero,
        _ => prf_bit(seed, instance, round),
    }
}

/// Content a coin share signs; binds it to one instance and round.
pub fn share_content(instance: InstanceId, round: Round) -> Vec<u8> {
    let mut out = Vec::with_capacity(16);
    out.extend_from_slice(b"cs");
    out.extend_from_slice(&instance.to_le_bytes());
    out.extend_from_slice(&round.to_le_bytes());
    out
}

/// Per-round coin accumulation at one process.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoinState {
    pub round: Round,
    pub echoes: BTreeSet<ProcessId>,
    pub shares: BTreeSet<ProcessId>,
    pub requested: bool,
    pub echo_sent: bool,
    pub share_sent: bool,
    pub revealed: Option<BinValue>,
}

impl CoinState {
    pub fn new(round: Round) -> Self {
        CoinState {
            round,
            ..Default::default()
        }
    }
}

/// What a coin transition asks the owner to do.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoinOutput {
    Broadcast(Envelope),
    Reveal(Round, BinValue),
}

/// Share construction and validation for one process in one instance.
#[derive(Clone, Debug)]
pub struct CoinContext {
    pub cfg: CoinConfig,
    pub params: SystemParams,
    pub instance: InstanceId,
    pub me: ProcessId,
    signer: Signer,
    verifier: Verifier,
}

impl CoinContext {
    pub fn new(
        cfg: CoinConfig,
        instance: InstanceId,
        signer: Signer,
        verifier: Verifier,
    ) -> Self {
        CoinContext {
            cfg,
            params: *verifier.params(),
            instance,
            me: signer.id(),
            signer,
            verifier,
        }
    }

    pub fn echo_gate_open(&self, cs: &CoinState) -> bool {
        !self.cfg.scheme.has_echo() || cs.echoes.len() >= self.params.quorum_large
    }

    /// Builds this process's share for `cs.round`.
    pub fn make_share(&self, cs: &CoinState) -> Result<Envelope> {
        if !self.echo_gate_open(cs) {
            return Err(Error::CoinNotReady(cs.round));
        }
        let mut e = Envelope::new(self.me, self.instance, cs.round, MessageKind::CoinShare, None);
        e.payload_hint = Some(
            self.signer
                .sign(&share_content(self.instance, cs.round), self.cfg.share_scheme()),
        );
        Ok(e)
    }

    pub fn share_is_valid(&self, share: &Envelope) -> bool {
        share.kind == MessageKind::CoinShare
            && share.instance == self.instance
            && share.payload_hint.as_ref().is_some_and(|tok| {
                tok.scheme() == self.cfg.share_scheme()
                    && self.verifier.verify(
                        share.sender,
                        &share_content(share.instance, share.round),
                        tok,
                    )
            })
    }

    fn try_reveal(&self, cs: &mut CoinState, out: &mut Vec<CoinOutput>) {
        if cs.revealed.is_none()
            && cs.requested
            && self.echo_gate_open(cs)
            && cs.shares.len() >= self.cfg.threshold_count(&self.params)
        {
            let v = coin_value(self.cfg.seed, self.instance, cs.round, false);
            cs.revealed = Some(v);
            out.push(CoinOutput::Reveal(cs.round, v));
        }
    }

    fn try_send_share(&self, cs: &mut CoinState, ops: &mut Vec<CryptoOp>, out: &mut Vec<CoinOutput>) {
        if cs.requested && !cs.share_sent && self.echo_gate_open(cs) {
            if let Ok(e) = self.make_share(cs) {
                cs.share_sent = true;
                ops.push(CryptoOp::ShareGen);
                out.push(CoinOutput::Broadcast(e));
            }
        }
    }

    /// The local process reached the coin point of `cs.round`. The share
    /// (or echo) goes out through `out`; self-delivery is the caller's job.
    pub fn request(&self, cs: &mut CoinState, ops: &mut Vec<CryptoOp>) -> Vec<CoinOutput> {
        let mut out = Vec::new();
        if cs.requested {
            return out;
        }
        cs.requested = true;
        if self.cfg.scheme.has_echo() && !cs.echo_sent {
            cs.echo_sent = true;
            ops.push(CryptoOp::Encrypt);
            out.push(CoinOutput::Broadcast(Envelope::new(
                self.me,
                self.instance,
                cs.round,
                MessageKind::CoinEcho,
                None,
            )));
        }
        self.try_send_share(cs, ops, &mut out);
        self.try_reveal(cs, &mut out);
        out
    }

    pub fn absorb_echo(&self, cs: &mut CoinState, echo: &Envelope, ops: &mut Vec<CryptoOp>) -> Vec<CoinOutput> {
        let mut out = Vec::new();
        if echo.kind != MessageKind::CoinEcho || echo.instance != self.instance {
            return out;
        }
        ops.push(CryptoOp::Decrypt);
        cs.echoes.insert(echo.sender);
        self.try_send_share(cs, ops, &mut out);
        self.try_reveal(cs, &mut out);
        out
    }

    /// Counts a share from a new sender. Invalid and duplicate shares leave
    /// the state unchanged.
    pub fn absorb_share(&self, cs: &mut CoinState, share: &Envelope, ops: &mut Vec<CryptoOp>) -> Vec<CoinOutput> {
        let mut out = Vec::new();
        if share.round != cs.round || cs.shares.contains(&share.sender) || cs.revealed.is_some() {
            return out;
        }
        if share.sender != self.me {
            ops.push(CryptoOp::ShareVerify);
        }
        if !self.share_is_valid(share) {
            return out;
        }
        cs.shares.insert(share.sender);
        self.try_reveal(cs, &mut out);
        out
    }
}

/// Functional form of [`CoinContext::absorb_share`].
pub fn absorb_share(
    ctx: &CoinContext,
    mut cs: CoinState,
    share: &Envelope,
) -> (CoinState, Option<BinValue>) {
    let mut ops = Vec::new();
    let out = ctx.absorb_share(&mut cs, share, &mut ops);
    let v = out.iter().find_map(|o| match o {
        CoinOutput::Reveal(_, v) => Some(*v),
        _ => None,
    });
    (cs, v)
}

/// Functional form of [`CoinContext::make_share`].
pub fn make_share(ctx: &CoinContext, cs: &CoinState) -> Result<Envelope> {
    ctx.make_share(cs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::TrustedSetup;
    use crate::types::thresholds;
    use proptest::prelude::*;

    fn ctx(n: usize, scheme: CoinScheme, th: ThresholdKind, me: usize) -> (TrustedSetup, CoinContext) {
        let setup = TrustedSetup::new(thresholds(n).unwrap(), 9);
        let c = CoinContext::new(
            CoinConfig::new(scheme, th, false, 0xC0FFEE),
            7,
            setup.signer(ProcessId(me)).unwrap(),
            setup.verifier(),
        );
        (setup, c)
    }

    fn share_from(setup: &TrustedSetup, cfg: CoinConfig, p: usize, instance: u64, round: Round) -> Envelope {
        let c = CoinContext::new(cfg, instance, setup.signer(ProcessId(p)).unwrap(), setup.verifier());
        c.make_share(&CoinState::new(round)).unwrap()
    }

    #[test]
    fn presets_fix_first_two_rounds() {
        for seed in 0..50 {
            assert_eq!(coin_value(seed, 3, 1, true), BinValue::One);
            assert_eq!(coin_value(seed, 3, 2, true), BinValue::Zero);
            assert_eq!(coin_value(seed, 3, 3, true), prf_bit(seed, 3, 3));
        }
    }

    #[test]
    fn prf_matches_reference_evaluation() {
        // top bit of sha256(b"coin" + pack("<QQI", seed, instance, round))[0],
        // evaluated with Python's hashlib
        assert_eq!(coin_value(0xC0FFEE, 7, 3, false), BinValue::One);
        assert_eq!(coin_value(0xC0FFEE, 7, 3, true), BinValue::One);
        let expected = [1u8, 1, 1, 1, 0, 0, 1, 0, 0, 1];
        for (i, bit) in expected.iter().enumerate() {
            assert_eq!(prf_bit(0xC0FFEE, 7, i as Round + 1).as_u8(), *bit, "round {}", i + 1);
        }
        let expected = [1u8, 0, 1, 1, 0, 0, 1, 0, 0, 0];
        for (i, bit) in expected.iter().enumerate() {
            assert_eq!(prf_bit(1, 0, i as Round + 1).as_u8(), *bit);
        }
    }

    #[test]
    fn echo_schemes_force_small_threshold() {
        let c = CoinConfig::new(CoinScheme::Pce, ThresholdKind::Large, false, 0);
        assert_eq!(c.threshold, ThresholdKind::Small);
        let c = CoinConfig::new(CoinScheme::Pc, ThresholdKind::Large, false, 0);
        assert_eq!(c.threshold, ThresholdKind::Large);
    }

    #[test]
    fn tc_share_available_immediately() {
        let (_, c) = ctx(4, CoinScheme::Tc, ThresholdKind::Large, 0);
        assert!(c.make_share(&CoinState::new(1)).is_ok());
    }

    #[test]
    fn pce_share_not_ready_below_echo_quorum() {
        let (_, c) = ctx(4, CoinScheme::Pce, ThresholdKind::Small, 0);
        let mut cs = CoinState::new(1);
        cs.echoes.extend([ProcessId(0), ProcessId(1)]);
        assert_eq!(c.make_share(&cs).unwrap_err(), Error::CoinNotReady(1));
        cs.echoes.insert(ProcessId(2));
        assert!(c.make_share(&cs).is_ok());
    }

    #[test]
    fn replayed_share_from_another_round_is_rejected() {
        let (setup, c) = ctx(4, CoinScheme::Tc, ThresholdKind::Large, 0);
        let mut share = share_from(&setup, c.cfg, 1, 7, 2);
        assert!(c.share_is_valid(&share));
        share.round = 3;
        assert!(!c.share_is_valid(&share));
        let mut other_instance = share_from(&setup, c.cfg, 1, 7, 2);
        other_instance.instance = 8;
        assert!(!c.share_is_valid(&other_instance));
    }

    #[test]
    fn third_distinct_share_reveals_at_n4() {
        let (setup, c) = ctx(4, CoinScheme::Tc, ThresholdKind::Large, 0);
        let mut cs = CoinState::new(3);
        cs.requested = true;
        for p in 0..2 {
            let (next, v) = absorb_share(&c, cs, &share_from(&setup, c.cfg, p, 7, 3));
            assert_eq!(v, None);
            cs = next;
        }
        // duplicate sender
        let (next, v) = absorb_share(&c, cs, &share_from(&setup, c.cfg, 1, 7, 3));
        assert_eq!((next.shares.len(), v), (2, None));
        let (next, v) = absorb_share(&c, next, &share_from(&setup, c.cfg, 2, 7, 3));
        assert_eq!(v, Some(coin_value(0xC0FFEE, 7, 3, false)));
        assert_eq!(next.revealed, v);
    }

    #[test]
    fn n16_small_threshold_reveals_oracle_value() {
        let (setup, c) = ctx(16, CoinScheme::Tc, ThresholdKind::Small, 0);
        let mut cs = CoinState::new(3);
        cs.requested = true;
        let mut revealed = None;
        // process 15 plays the Byzantine contributor; its share is still valid
        for p in [15, 1, 2, 3, 4, 5] {
            let (next, v) = absorb_share(&c, cs, &share_from(&setup, c.cfg, p, 7, 3));
            cs = next;
            revealed = revealed.or(v);
        }
        assert_eq!(cs.shares.len(), 6);
        assert_eq!(revealed, Some(BinValue::One));
    }

    #[test]
    fn shares_on_the_wrong_key_are_ignored() {
        let (setup, c) = ctx(4, CoinScheme::Tc, ThresholdKind::Large, 0);
        let small = CoinConfig::new(CoinScheme::Tc, ThresholdKind::Small, false, 0xC0FFEE);
        let share = share_from(&setup, small, 1, 7, 1);
        let (cs, _) = absorb_share(&c, CoinState::new(1), &share);
        assert!(cs.shares.is_empty());
    }

    #[test]
    fn echo_gate_buffers_early_shares() {
        let (setup, c) = ctx(4, CoinScheme::Tce, ThresholdKind::Small, 0);
        let mut ops = Vec::new();
        let mut cs = CoinState::new(4);
        let out = c.request(&mut cs, &mut ops);
        assert!(matches!(&out[..], [CoinOutput::Broadcast(e)] if e.kind == MessageKind::CoinEcho));
        // same share key as TCE, built without an echo gate
        let plain = CoinConfig::new(CoinScheme::Tc, ThresholdKind::Small, false, 0xC0FFEE);
        for p in [1, 2] {
            let out = c.absorb_share(&mut cs, &share_from(&setup, plain, p, 7, 4), &mut ops);
            assert!(out.is_empty(), "no reveal before the echo gate");
        }
        for p in [0, 1] {
            let echo = Envelope::new(ProcessId(p), 7, 4, MessageKind::CoinEcho, None);
            assert!(c.absorb_echo(&mut cs, &echo, &mut ops).is_empty());
        }
        let echo = Envelope::new(ProcessId(2), 7, 4, MessageKind::CoinEcho, None);
        let out = c.absorb_echo(&mut cs, &echo, &mut ops);
        assert!(matches!(out[0], CoinOutput::Broadcast(ref e) if e.kind == MessageKind::CoinShare));
        assert!(matches!(out[1], CoinOutput::Reveal(4, _)));
    }

    proptest! {
        #[test]
        fn coin_is_a_pure_function(seed in any::<u64>(), inst in any::<u64>(), round in 1u32..1000) {
            prop_assert_eq!(prf_bit(seed, inst, round), prf_bit(seed, inst, round));
            prop_assert_eq!(coin_value(seed, inst, round, false), prf_bit(seed, inst, round));
        }

        #[test]
        fn reveal_needs_threshold_distinct_shares(order in proptest::collection::vec(0usize..4, 0..12)) {
            let (setup, c) = ctx(4, CoinScheme::Tc, ThresholdKind::Large, 0);
            let mut cs = CoinState::new(5);
            cs.requested = true;
            let mut seen = BTreeSet::new();
            for p in order {
                let (next, v) = absorb_share(&c, cs, &share_from(&setup, c.cfg, p, 7, 5));
                cs = next;
                seen.insert(p);
                if v.is_some() {
                    prop_assert_eq!(seen.len(), 3);
                }
                prop_assert_eq!(cs.revealed.is_some(), seen.len() >= 3);
            }
        }
    }
}
