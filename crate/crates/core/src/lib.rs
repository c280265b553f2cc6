pub mod coins;
pub mod error;
pub mod harness;
pub mod netsim;
pub mod primitives;
pub mod protocols;
pub mod types;
