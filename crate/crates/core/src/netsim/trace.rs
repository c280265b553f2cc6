use serde::{Deserialize, Serialize};

use crate::protocols::Action;
use crate::types::{Envelope, InstanceId, ProcessId, Round};

use super::VTime;

/// One transition: a process handled `event` (or started, when absent) at
/// virtual time `t_ns` and produced `actions`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t_ns: VTime,
    pub process: ProcessId,
    pub instance: InstanceId,
    pub round: Round,
    pub event: Option<String>,
    pub from: Option<ProcessId>,
    pub actions: Vec<String>,
}

impl TraceRecord {
    pub fn new(
        t_ns: VTime,
        process: ProcessId,
        instance: InstanceId,
        round: Round,
        event: Option<&Envelope>,
        actions: &[Action],
    ) -> Self {
        TraceRecord {
            t_ns,
            process,
            instance,
            round,
            event: event.map(|e| e.to_string()),
            from: event.map(|e| e.sender),
            actions: actions.iter().map(describe).collect(),
        }
    }
}

fn describe(a: &Action) -> String {
    match a {
        Action::Broadcast(e) => format!("broadcast {e}"),
        Action::Decide { value, round } => format!("decide {value} in round {round}"),
        Action::RequestCoinShare(r) => format!("coin point {r}"),
        Action::RevealCoin { round, value } => format!("coin {round} = {value}"),
        Action::Terminate => "terminate".into(),
    }
}
