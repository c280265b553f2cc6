use thiserror::Error;

use crate::types::{ProcessId, Round};

/// Errors surfaced by configuration, the crypto layer, and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("no key configured for process {0}")]
    UnknownSigner(ProcessId),

    #[error("insufficient shares: have {have}, need {need}")]
    InsufficientShares { have: usize, need: usize },

    #[error("signature shares are over different digests")]
    DigestMismatch,

    #[error("coin share not ready for round {0}: echo quorum not reached")]
    CoinNotReady(Round),

    #[error("liveness failure: process {process} reached round {round} without deciding (instance {instance})")]
    RoundCapExceeded {
        process: ProcessId,
        round: Round,
        instance: u64,
    },

    #[error("liveness failure: network quiescent with undecided non-faulty processes {undecided:?} (instance {instance})")]
    Stalled {
        undecided: Vec<ProcessId>,
        instance: u64,
    },

    #[error("agreement violated in instance {instance}: {detail}")]
    Agreement { instance: u64, detail: String },

    #[error("validity violated in instance {instance}: {detail}")]
    Validity { instance: u64, detail: String },

    #[error("experiment [{label}] aborted: {cause}\nlast trace records:\n{trace_tail}")]
    Aborted {
        label: String,
        cause: Box<Error>,
        trace_tail: String,
    },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
