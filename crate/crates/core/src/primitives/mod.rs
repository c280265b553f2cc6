//! Behavioral stand-ins for signatures, threshold signatures, and coin
//! shares, plus the byte-size and CPU-cost accounting model.
//!
//! Tokens are keyed hashes over content. A process can only produce tokens
//! through its own [`Signer`]; everyone else gets a [`Verifier`], which can
//! check tokens and combine shares but never sign. That is the simulator's
//! analog of unforgeability.

mod cost;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

pub use cost::{
    interpolate, message_size, op_cost, CoinImpl, CostModel, CryptoConfig, CryptoOp,
    SignatureType, ThresholdKind,
};

use crate::error::{Error, Result};
use crate::types::{ProcessId, SystemParams};

pub type Digest = [u8; 32];

fn sha256(parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    let out = h.finalize();
    let mut d = [0u8; 32];
    d.copy_from_slice(&out);
    d
}

pub fn content_digest(content: &[u8]) -> Digest {
    sha256(&[b"content", content])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SigScheme {
    Plain,
    /// `t + 1` threshold key.
    ThreshSmall,
    /// `n - t` threshold key.
    ThreshLarge,
}

impl SigScheme {
    fn code(self) -> u8 {
        match self {
            SigScheme::Plain => 0,
            SigScheme::ThreshSmall => 1,
            SigScheme::ThreshLarge => 2,
        }
    }

    pub fn threshold(self, params: &SystemParams) -> Option<usize> {
        match self {
            SigScheme::Plain => None,
            SigScheme::ThreshSmall => Some(params.quorum_small),
            SigScheme::ThreshLarge => Some(params.quorum_large),
        }
    }
}

/// A signature (or threshold signature share) by one process.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignatureToken {
    signer: ProcessId,
    digest: Digest,
    scheme: SigScheme,
    tag: Digest,
}

impl SignatureToken {
    pub fn signer(&self) -> ProcessId {
        self.signer
    }

    pub fn digest(&self) -> &Digest {
        &self.digest
    }

    pub fn scheme(&self) -> SigScheme {
        self.scheme
    }

    /// Identity used by verification caches.
    pub fn cache_key(&self) -> Digest {
        self.tag
    }
}

impl fmt::Debug for SignatureToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Sig({}, {:?}, {:02x}{:02x})",
            self.signer, self.scheme, self.digest[0], self.digest[1]
        )
    }
}

/// A combined threshold signature. Unique per (content, scheme).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThresholdSignatureToken {
    digest: Digest,
    scheme: SigScheme,
    canonical: bool,
    tag: Digest,
}

impl ThresholdSignatureToken {
    pub fn digest(&self) -> &Digest {
        &self.digest
    }

    pub fn scheme(&self) -> SigScheme {
        self.scheme
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn cache_key(&self) -> Digest {
        self.tag
    }
}

impl fmt::Debug for ThresholdSignatureToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TSig({:?}, {:02x}{:02x})",
            self.scheme, self.digest[0], self.digest[1]
        )
    }
}

/// Output of the trusted setup: per-process key shares for the plain key
/// and both threshold keys.
#[derive(Clone, Debug)]
pub struct TrustedSetup {
    params: SystemParams,
    master: Digest,
}

impl TrustedSetup {
    pub fn new(params: SystemParams, seed: u64) -> Self {
        TrustedSetup {
            params,
            master: sha256(&[b"setup", &seed.to_le_bytes()]),
        }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Hands out the private key material of `p`.
    pub fn signer(&self, p: ProcessId) -> Result<Signer> {
        if p.0 >= self.params.n {
            return Err(Error::UnknownSigner(p));
        }
        Ok(Signer {
            id: p,
            master: self.master,
        })
    }

    pub fn verifier(&self) -> Verifier {
        Verifier {
            params: self.params,
            master: self.master,
        }
    }
}

fn key_secret(master: &Digest, p: ProcessId, scheme: SigScheme) -> Digest {
    sha256(&[
        b"key",
        master,
        &(p.0 as u64).to_le_bytes(),
        &[scheme.code()],
    ])
}

fn group_secret(master: &Digest, scheme: SigScheme) -> Digest {
    sha256(&[b"group", master, &[scheme.code()]])
}

/// Private signing capability of one process.
#[derive(Clone)]
pub struct Signer {
    id: ProcessId,
    master: Digest,
}

impl fmt::Debug for Signer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signer({})", self.id)
    }
}

impl Signer {
    pub fn id(&self) -> ProcessId {
        self.id
    }

    pub fn sign(&self, content: &[u8], scheme: SigScheme) -> SignatureToken {
        let digest = content_digest(content);
        let secret = key_secret(&self.master, self.id, scheme);
        SignatureToken {
            signer: self.id,
            digest,
            scheme,
            tag: sha256(&[b"sig", &secret, &digest]),
        }
    }
}

/// Convenience wrapper: sign as `signer` using the setup's key for it.
pub fn sign(
    setup: &TrustedSetup,
    signer: ProcessId,
    content: &[u8],
    scheme: SigScheme,
) -> Result<SignatureToken> {
    Ok(setup.signer(signer)?.sign(content, scheme))
}

/// Public verification and share combination.
#[derive(Clone)]
pub struct Verifier {
    params: SystemParams,
    master: Digest,
}

impl fmt::Debug for Verifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Verifier(n={})", self.params.n)
    }
}

impl Verifier {
    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    fn token_ok(&self, token: &SignatureToken) -> bool {
        if token.signer.0 >= self.params.n {
            return false;
        }
        let secret = key_secret(&self.master, token.signer, token.scheme);
        sha256(&[b"sig", &secret, &token.digest]) == token.tag
    }

    /// True iff `token` was produced by `signer` over exactly `content`.
    pub fn verify(&self, signer: ProcessId, content: &[u8], token: &SignatureToken) -> bool {
        token.signer == signer && token.digest == content_digest(content) && self.token_ok(token)
    }

    /// Combines shares into the unique threshold signature for their digest.
    pub fn combine(
        &self,
        shares: &[SignatureToken],
        scheme: SigScheme,
    ) -> Result<ThresholdSignatureToken> {
        let need = scheme
            .threshold(&self.params)
            .ok_or_else(|| Error::Config("plain signatures cannot be combined".into()))?;
        let Some(first) = shares.first() else {
            return Err(Error::InsufficientShares { have: 0, need });
        };
        if shares.iter().any(|s| s.digest != first.digest) {
            return Err(Error::DigestMismatch);
        }
        let mut signers: Vec<ProcessId> = shares
            .iter()
            .filter(|s| s.scheme == scheme && self.token_ok(s))
            .map(|s| s.signer)
            .collect();
        signers.sort();
        signers.dedup();
        if signers.len() < need {
            return Err(Error::InsufficientShares {
                have: signers.len(),
                need,
            });
        }
        Ok(self.threshold_token(first.digest, scheme))
    }

    fn threshold_token(&self, digest: Digest, scheme: SigScheme) -> ThresholdSignatureToken {
        let secret = group_secret(&self.master, scheme);
        ThresholdSignatureToken {
            digest,
            scheme,
            canonical: true,
            tag: sha256(&[b"tsig", &secret, &digest]),
        }
    }

    pub fn verify_threshold(&self, content: &[u8], token: &ThresholdSignatureToken) -> bool {
        let digest = content_digest(content);
        token.digest == digest && *token == self.threshold_token(digest, token.scheme)
    }
}
