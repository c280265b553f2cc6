use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Envelope, Evidence, MessageKind, ValidityProof};

/// How consensus messages are authenticated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignatureType {
    ThresholdBls,
    Eddsa,
    /// Unsigned; channels provide authentication.
    None,
}

/// Coin share construction, which fixes share size and cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoinImpl {
    /// Threshold-BLS shares.
    Tc,
    /// Diffie-Hellman shares with equality-of-discrete-log proofs.
    Pc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    /// `t + 1`
    Small,
    /// `n - t`
    Large,
}

/// Crypto and channel settings that determine message sizes and costs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CryptoConfig {
    pub signature: SignatureType,
    pub coin: CoinImpl,
    pub coin_threshold: ThresholdKind,
    pub encrypt_channels: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CryptoOp {
    Sign,
    Verify,
    Encrypt,
    Decrypt,
    ShareGen,
    ShareVerify,
    Combine,
    CoinGen,
}

/// Per-message sizes (bytes) and per-operation costs (virtual ms).
///
/// Defaults are the published benchmark constants for EDDSA, threshold-BLS,
/// NaCl secretbox, and the two coin constructions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    pub sig_size: u64,
    pub signed_msg: u64,
    pub eddsa_msg: u64,
    pub encrypted_msg: u64,
    pub pc_share: u64,
    pub tc_share: u64,
    /// Bytes a threshold-signature proof adds: one more signed message.
    pub threshold_proof: u64,

    pub eddsa_sign_ms: f64,
    pub eddsa_verify_ms: f64,
    pub tbls_sign_ms: f64,
    pub tbls_verify_ms: f64,
    pub encrypt_ms: f64,
    pub decrypt_ms: f64,
    pub pc_share_gen_ms: f64,
    pub pc_share_verify_ms: f64,
    pub tc_share_gen_ms: f64,
    pub tc_share_verify_ms: f64,

    /// Node counts at which the combine / coin-gen rows are tabulated.
    pub table_nodes: Vec<f64>,
    pub pc_combine_small: Vec<f64>,
    pub pc_combine_large: Vec<f64>,
    pub pc_coin_gen_small: Vec<f64>,
    pub pc_coin_gen_large: Vec<f64>,
    pub tc_combine_small: Vec<f64>,
    pub tc_combine_large: Vec<f64>,
    pub tc_coin_gen_small: Vec<f64>,
    pub tc_coin_gen_large: Vec<f64>,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            sig_size: 85,
            signed_msg: 110,
            eddsa_msg: 109,
            encrypted_msg: 70,
            pc_share: 212,
            tc_share: 110,
            threshold_proof: 110,

            eddsa_sign_ms: 0.28,
            eddsa_verify_ms: 0.49,
            tbls_sign_ms: 0.365,
            tbls_verify_ms: 4.20,
            encrypt_ms: 0.0007,
            decrypt_ms: 0.0017,
            pc_share_gen_ms: 1.40,
            pc_share_verify_ms: 1.60,
            tc_share_gen_ms: 0.365,
            tc_share_verify_ms: 4.20,

            table_nodes: vec![4.0, 8.0, 16.0, 32.0, 48.0],
            pc_combine_small: vec![0.71, 1.07, 2.07, 3.84, 5.58],
            pc_combine_large: vec![1.06, 1.77, 3.85, 7.34, 11.10],
            pc_coin_gen_small: vec![3.90, 6.06, 11.92, 21.74, 31.16],
            pc_coin_gen_large: vec![5.93, 9.93, 21.90, 41.01, 61.47],
            tc_combine_small: vec![0.21, 0.22, 0.60, 1.03, 1.71],
            tc_combine_large: vec![0.22, 0.41, 1.05, 2.28, 3.63],
            tc_coin_gen_small: vec![8.64, 12.93, 26.09, 48.38, 69.92],
            tc_coin_gen_large: vec![13.36, 21.67, 47.21, 91.18, 134.52],
        }
    }
}

impl CostModel {
    /// Loads overrides from a TOML key-value file; missing keys keep their
    /// defaults.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let model: CostModel = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let scalars = [
            self.eddsa_sign_ms,
            self.eddsa_verify_ms,
            self.tbls_sign_ms,
            self.tbls_verify_ms,
            self.encrypt_ms,
            self.decrypt_ms,
            self.pc_share_gen_ms,
            self.pc_share_verify_ms,
            self.tc_share_gen_ms,
            self.tc_share_verify_ms,
        ];
        if scalars.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Config("cost constants must be finite and nonnegative".into()));
        }
        let rows = [
            &self.pc_combine_small,
            &self.pc_combine_large,
            &self.pc_coin_gen_small,
            &self.pc_coin_gen_large,
            &self.tc_combine_small,
            &self.tc_combine_large,
            &self.tc_coin_gen_small,
            &self.tc_coin_gen_large,
        ];
        if self.table_nodes.len() < 2 || self.table_nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("table_nodes must be strictly increasing with >= 2 entries".into()));
        }
        for row in rows {
            if row.len() != self.table_nodes.len() || row.iter().any(|c| *c < 0.0) {
                return Err(Error::Config("coin cost rows must match table_nodes".into()));
            }
        }
        Ok(())
    }

    fn base_size(&self, cfg: &CryptoConfig) -> u64 {
        match cfg.signature {
            SignatureType::ThresholdBls => self.signed_msg,
            SignatureType::Eddsa => self.eddsa_msg,
            SignatureType::None => self.encrypted_msg,
        }
    }

    fn share_size(&self, cfg: &CryptoConfig) -> u64 {
        match cfg.coin {
            CoinImpl::Pc => self.pc_share,
            CoinImpl::Tc => self.tc_share,
        }
    }

    pub fn proof_size(&self, proof: &ValidityProof) -> u64 {
        match proof {
            ValidityProof::Quorum(cert) => match &cert.evidence {
                Evidence::Threshold { .. } => self.threshold_proof,
                Evidence::SigSet { entries } => self.sig_size * entries.len() as u64,
            },
            ValidityProof::Dual { zero, one } => self.proof_size(zero) + self.proof_size(one),
        }
    }
}

/// Bytes on the wire for one point-to-point copy of `e`.
pub fn message_size(e: &Envelope, cfg: &CryptoConfig, model: &CostModel) -> u64 {
    let own = match e.kind {
        MessageKind::CoinEcho => model.encrypted_msg,
        MessageKind::CoinShare => model.share_size(cfg),
        _ => {
            model.base_size(cfg) + e.proof.as_ref().map(|p| model.proof_size(p)).unwrap_or(0)
        }
    };
    own + e
        .piggyback
        .as_ref()
        .map(|inner| message_size(inner, cfg, model))
        .unwrap_or(0)
}

/// Piecewise-linear interpolation over `(xs, ys)`; extrapolates with the
/// nearest segment outside the tabulated range.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert!(xs.len() == ys.len() && xs.len() >= 2);
    let last = xs.len() - 1;
    let seg = if x <= xs[0] {
        0
    } else if x >= xs[last] {
        last - 1
    } else {
        xs.windows(2).position(|w| x >= w[0] && x <= w[1]).unwrap()
    };
    let (x0, x1, y0, y1) = (xs[seg], xs[seg + 1], ys[seg], ys[seg + 1]);
    let y = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    y.max(0.0)
}

/// Virtual milliseconds for one crypto operation at system size `n`.
pub fn op_cost(op: CryptoOp, cfg: &CryptoConfig, n: usize, model: &CostModel) -> f64 {
    let table = |pc_small: &[f64], pc_large: &[f64], tc_small: &[f64], tc_large: &[f64]| {
        let row = match (cfg.coin, cfg.coin_threshold) {
            (CoinImpl::Pc, ThresholdKind::Small) => pc_small,
            (CoinImpl::Pc, ThresholdKind::Large) => pc_large,
            (CoinImpl::Tc, ThresholdKind::Small) => tc_small,
            (CoinImpl::Tc, ThresholdKind::Large) => tc_large,
        };
        interpolate(&model.table_nodes, row, n as f64)
    };
    match op {
        CryptoOp::Sign => match cfg.signature {
            SignatureType::ThresholdBls => model.tbls_sign_ms,
            SignatureType::Eddsa => model.eddsa_sign_ms,
            SignatureType::None => 0.0,
        },
        CryptoOp::Verify => match cfg.signature {
            SignatureType::ThresholdBls => model.tbls_verify_ms,
            SignatureType::Eddsa => model.eddsa_verify_ms,
            SignatureType::None => 0.0,
        },
        CryptoOp::Encrypt => model.encrypt_ms,
        CryptoOp::Decrypt => model.decrypt_ms,
        CryptoOp::ShareGen => match cfg.coin {
            CoinImpl::Pc => model.pc_share_gen_ms,
            CoinImpl::Tc => model.tc_share_gen_ms,
        },
        CryptoOp::ShareVerify => match cfg.coin {
            CoinImpl::Pc => model.pc_share_verify_ms,
            CoinImpl::Tc => model.tc_share_verify_ms,
        },
        CryptoOp::Combine => table(
            &model.pc_combine_small,
            &model.pc_combine_large,
            &model.tc_combine_small,
            &model.tc_combine_large,
        ),
        CryptoOp::CoinGen => table(
            &model.pc_coin_gen_small,
            &model.pc_coin_gen_large,
            &model.tc_coin_gen_small,
            &model.tc_coin_gen_large,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::TrustedSetup;
    use crate::types::{
        thresholds, AuxValue, MsgValue, ProcessId, QuorumCert, SignedStatement, Statement,
    };

    fn cfg(signature: SignatureType, coin: CoinImpl, th: ThresholdKind) -> CryptoConfig {
        CryptoConfig {
            signature,
            coin,
            coin_threshold: th,
            encrypt_channels: signature == SignatureType::None,
        }
    }

    fn statement(kind: MessageKind, v: AuxValue) -> Statement {
        Statement {
            instance: 0,
            round: 1,
            kind,
            value: MsgValue::Aux(v),
        }
    }

    #[test]
    fn signed_auxm_with_threshold_proof_is_220_bytes() {
        let setup = TrustedSetup::new(thresholds(4).unwrap(), 1);
        let v = setup.verifier();
        let st = statement(MessageKind::Auxm, AuxValue::One);
        let shares: Vec<_> = (0..3)
            .map(|p| {
                setup
                    .signer(ProcessId(p))
                    .unwrap()
                    .sign(&st.canonical_bytes(), crate::primitives::SigScheme::ThreshLarge)
            })
            .collect();
        let token = v
            .combine(&shares, crate::primitives::SigScheme::ThreshLarge)
            .unwrap();
        let mut e = Envelope::new(ProcessId(0), 0, 2, MessageKind::Auxm, Some(MsgValue::Aux(AuxValue::One)));
        e.proof = Some(ValidityProof::Quorum(QuorumCert {
            kind: MessageKind::Auxm,
            round: 1,
            value: AuxValue::One,
            evidence: Evidence::Threshold { statement: st, token },
        }));
        let c = cfg(SignatureType::ThresholdBls, CoinImpl::Tc, ThresholdKind::Large);
        assert_eq!(message_size(&e, &c, &CostModel::default()), 220);
    }

    #[test]
    fn encrypted_sval_is_70_bytes() {
        let e = Envelope::new(ProcessId(0), 0, 1, MessageKind::SVal, Some(MsgValue::Aux(AuxValue::Zero)));
        let c = cfg(SignatureType::None, CoinImpl::Tc, ThresholdKind::Large);
        assert_eq!(message_size(&e, &c, &CostModel::default()), 70);
    }

    #[test]
    fn eddsa_prevote_with_three_signature_proof_is_364_bytes() {
        let setup = TrustedSetup::new(thresholds(4).unwrap(), 1);
        let st = statement(MessageKind::PreVote, AuxValue::One);
        let entries = (0..3)
            .map(|p| SignedStatement {
                statement: st,
                sig: setup
                    .signer(ProcessId(p))
                    .unwrap()
                    .sign(&st.canonical_bytes(), crate::primitives::SigScheme::Plain),
            })
            .collect();
        let mut e = Envelope::new(ProcessId(0), 0, 2, MessageKind::PreVote, Some(MsgValue::Aux(AuxValue::One)));
        e.proof = Some(ValidityProof::Quorum(QuorumCert {
            kind: MessageKind::PreVote,
            round: 1,
            value: AuxValue::One,
            evidence: Evidence::SigSet { entries },
        }));
        let c = cfg(SignatureType::Eddsa, CoinImpl::Pc, ThresholdKind::Large);
        // 109 + 3 * 85
        assert_eq!(message_size(&e, &c, &CostModel::default()), 364);
    }

    #[test]
    fn coin_message_sizes() {
        let m = CostModel::default();
        let share = Envelope::new(ProcessId(0), 0, 1, MessageKind::CoinShare, None);
        let echo = Envelope::new(ProcessId(0), 0, 1, MessageKind::CoinEcho, None);
        let pc = cfg(SignatureType::Eddsa, CoinImpl::Pc, ThresholdKind::Large);
        let tc = cfg(SignatureType::ThresholdBls, CoinImpl::Tc, ThresholdKind::Large);
        assert_eq!(message_size(&share, &pc, &m), 212);
        assert_eq!(message_size(&share, &tc, &m), 110);
        assert_eq!(message_size(&echo, &tc, &m), 70);
    }

    #[test]
    fn merged_envelope_size_is_additive() {
        let m = CostModel::default();
        let tc = cfg(SignatureType::ThresholdBls, CoinImpl::Tc, ThresholdKind::Large);
        let mut share = Envelope::new(ProcessId(0), 0, 1, MessageKind::CoinShare, None);
        let aux = Envelope::new(ProcessId(0), 0, 2, MessageKind::Auxm, Some(MsgValue::FollowCoin));
        let aux_size = message_size(&aux, &tc, &m);
        share.piggyback = Some(Box::new(aux));
        assert_eq!(message_size(&share, &tc, &m), 110 + aux_size);
    }

    #[test]
    fn op_cost_table_values() {
        let m = CostModel::default();
        let tbls = cfg(SignatureType::ThresholdBls, CoinImpl::Tc, ThresholdKind::Large);
        assert_eq!(op_cost(CryptoOp::Verify, &tbls, 4, &m), 4.20);
        let pc = cfg(SignatureType::Eddsa, CoinImpl::Pc, ThresholdKind::Large);
        assert_eq!(op_cost(CryptoOp::ShareGen, &pc, 4, &m), 1.40);
        assert_eq!(op_cost(CryptoOp::CoinGen, &tbls, 16, &m), 47.21);
        assert_eq!(op_cost(CryptoOp::Verify, &pc, 4, &m), 0.49);
    }

    #[test]
    fn op_cost_interpolates_unlisted_node_counts() {
        let m = CostModel::default();
        let tbls = cfg(SignatureType::ThresholdBls, CoinImpl::Tc, ThresholdKind::Large);
        // halfway between 16 (47.21) and 32 (91.18)
        let mid = op_cost(CryptoOp::CoinGen, &tbls, 24, &m);
        assert!((mid - (47.21 + 91.18) / 2.0).abs() < 1e-9);
        // n = 7 lies on the 4..8 segment
        let seven = op_cost(CryptoOp::CoinGen, &tbls, 7, &m);
        assert!((seven - (13.36 + (21.67 - 13.36) * 0.75)).abs() < 1e-9);
    }

    #[test]
    fn cost_model_loads_partial_overrides() {
        let m = CostModel::from_toml_str("tbls_verify_ms = 2.0\nsig_size = 96\n").unwrap();
        assert_eq!(m.tbls_verify_ms, 2.0);
        assert_eq!(m.sig_size, 96);
        assert_eq!(m.signed_msg, 110);
        assert!(CostModel::from_toml_str("decrypt_ms = -1.0").is_err());
    }
}
