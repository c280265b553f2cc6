//! One consensus instance among four processes, printed per process.
//!
//! cargo run --example quickstart -- [S1|S2|S3|NS1|NS2|NS3]

use bincons::netsim::{World, WorldConfig};
use bincons::protocols::{Algorithm, ProtocolConfig};
use bincons::types::BinValue;

fn main() -> bincons::error::Result<()> {
    let alg: Algorithm = std::env::args().nth(1).as_deref().unwrap_or("S1").parse()?;
    let world = World::new(WorldConfig::new(ProtocolConfig::new(alg, 4)?))?;

    let proposals = [BinValue::One, BinValue::Zero, BinValue::One, BinValue::Zero];
    let outcome = world.run_instance(0, &proposals)?;
    outcome.check_safety()?;

    println!("{alg}, proposals {proposals:?}");
    for node in &outcome.nodes {
        let d = node.decision.expect("every correct process decides");
        println!(
            "  {}: decided {} in round {} at {:.3} ms, {} messages, {} bytes",
            node.process,
            d.value,
            d.round,
            d.vtime_ns as f64 / 1e6,
            node.messages_sent,
            node.bytes_sent
        );
    }
    println!("coins revealed: {:?}", outcome.coins);
    Ok(())
}
