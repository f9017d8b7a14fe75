//! Runtime half of the symplectic tensor invariant computation: transports,
//! execution schemes, adaptation policies, statistics, output formats, and
//! the command-line interface. The algorithmic core lives in `sptensor-core`.

pub mod adapt;
pub mod bench;
pub mod cli;
pub mod formats;
pub mod schemes;
pub mod stats;
pub mod transport;
