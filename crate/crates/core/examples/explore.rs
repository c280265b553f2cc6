//! Schedule exploration: random delivery orders and targeted delays against
//! NS1, hunting for processes that decide on an earlier round's messages.

use bincons::netsim::{AdversaryRule, Behavior, Scheduler, World, WorldConfig};
use bincons::protocols::{Algorithm, ProtocolConfig};
use bincons::types::{BinValue, MessageKind, ProcessId};

fn main() -> bincons::error::Result<()> {
    let proposals = [BinValue::One, BinValue::Zero, BinValue::One, BinValue::Zero];
    let mut late = None;
    let mut worst = 0;
    for seed in 0..2_000u64 {
        let behavior = Behavior::ALL[seed as usize % Behavior::ALL.len()];
        let mut cfg = WorldConfig::new(ProtocolConfig::new(Algorithm::NS1, 4)?).with_faults(1, behavior);
        cfg.scheduler = Scheduler::random(seed);
        let o = World::new(cfg)?.run_instance(seed, &proposals)?;
        o.check_safety()?;
        worst = worst.max(o.max_round());
        if late.is_none() && o.correct().any(|n| n.decision.is_some_and(|d| d.late)) {
            late = Some((seed, behavior));
        }
    }
    println!("2000 random schedules: safe, worst decision round {worst}");
    match late {
        Some((seed, b)) => println!("first late decision: seed {seed}, faulty behavior {b}"),
        None => println!("no late decision found"),
    }

    // Hold back process 0's auxiliary messages to everyone for 20 ms.
    let rule = AdversaryRule {
        sender: Some(ProcessId(0)),
        receiver: None,
        kind: Some(MessageKind::Auxm),
        rounds: None,
        delay_ms: 20.0,
    };
    let mut cfg = WorldConfig::new(ProtocolConfig::new(Algorithm::NS1, 4)?);
    cfg.scheduler = Scheduler::Adversary { rules: vec![rule] };
    let o = World::new(cfg)?.run_instance(0, &proposals)?;
    o.check_safety()?;
    for n in o.correct() {
        let d = n.decision.unwrap();
        println!("  {} decided {} in round {} (late: {})", n.process, d.value, d.round, d.late);
    }
    Ok(())
}
