//! Unit-disk radio, neighbor tracking and per-node packet buffering.

mod buffer;
mod neighbors;
mod radio;

pub use buffer::PacketBuffer;
pub use neighbors::{departed_fraction, is_stable, NeighborConfig, NeighborTable};
pub use radio::{BroadcastOutcome, Medium, RadioConfig, Stations, UnicastFailure, UnicastOutcome};
