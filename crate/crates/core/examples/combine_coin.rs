//! Piggybacking the next round's first message on the coin share halves the
//! broadcasts per round for S1.

use bincons::netsim::{World, WorldConfig};
use bincons::protocols::{Algorithm, ProtocolConfig};
use bincons::types::BinValue::{One, Zero};

fn main() -> bincons::error::Result<()> {
    for combine in [false, true] {
        let world = World::new(WorldConfig::new(ProtocolConfig::new(Algorithm::S1, 4)?.with_combine_coin(combine)))?;
        let o = world.run_instance(3, &[One, Zero, Zero, One])?;
        o.check_safety()?;
        let node = &o.nodes[0];
        println!("combine {combine}: decided in round {}, broadcasts by round {:?}",
            node.decision.unwrap().round, node.broadcasts_by_round);
    }
    Ok(())
}
