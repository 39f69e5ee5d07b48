//! Outage simulation and analytical bounds for two-hop decode-and-forward
//! relay networks where the relays carry multiple antennas.
//!
//! The source and destination have one antenna each; `N` antennas are spread
//! over `K` relays. Relays combine the first hop with MRC and either
//! beamform the second hop coherently or act as one distributed space-time
//! code. The crate provides:
//!
//! * [`channel`]: reproducible per-trial Rayleigh draws and partition views,
//! * [`combining`]: per-trial SNR formulas plus a signal-level oracle,
//! * [`scheme`]: the relaying schemes behind a common trait and a registry,
//! * [`analysis`]: Erlang CDFs, high-SNR outage bounds and selection-set
//!   probabilities,
//! * [`montecarlo`]: the paired-sampling outage estimator,
//! * [`cli`]: the sweep front end that writes CSV.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod combining;
mod error;
pub mod montecarlo;
pub mod scheme;

pub use analysis::{BoundFamily, BoundSet};
pub use channel::{ChannelRealization, Partition, TrialRng};
pub use error::{Error, Result};
pub use montecarlo::{OutageEstimate, OutageTable, SimConfig};
pub use scheme::{Scheme, SchemeId, SchemeRegistry};

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
