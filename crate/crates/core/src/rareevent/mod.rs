//! Variance-reduced estimators for rare persistence and rare extinction.
//!
//! * [`ips_persistence`]: interacting particles, dead particles are resampled
//!   from the survivors every generation.
//! * [`is_extinction`]: importance sampling with a twisted extinction rate.
//! * [`split_extinction`]: fixed-success multilevel splitting on the
//!   occupancy count.

mod ips;
mod is;
mod splitting;

pub use ips::{ips_persistence, IpsConfig, IpsDiagnostics, DEFAULT_BATCHES};
pub use is::{is_extinction, IsDiagnostics, TwistSchedule};
pub use splitting::{
    geometric_thresholds, split_extinction, LevelStats, SplittingConfig, SplittingDiagnostics, SplittingRun,
    DEFAULT_REPLICATIONS, DEFAULT_WORK_CAP,
};
