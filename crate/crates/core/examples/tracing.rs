//! Transition trace of one S2 instance as NDJSON on stdout.

use bincons::netsim::{World, WorldConfig};
use bincons::protocols::{Algorithm, ProtocolConfig};
use bincons::types::BinValue::{One, Zero};

fn main() -> bincons::error::Result<()> {
    let world = World::new(WorldConfig::new(ProtocolConfig::new(Algorithm::S2, 4)?))?;
    let mut out = std::io::stdout().lock();
    let outcome = world.run_traced(0, &[One, One, Zero, One], Some(&mut out))?;
    eprintln!("{} events, ended at {} ns", outcome.events, outcome.end_ns);
    Ok(())
}
