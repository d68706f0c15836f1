pub mod coupling;
pub mod deviation;
pub mod gillespie;
pub mod metropolis;
pub mod rates;
pub mod rng;

pub use coupling::{couple, couple_with, CouplingEvent, CouplingTrace, StopRule};
pub use deviation::{rate_ratio_deviation, DeviationReport};
pub use gillespie::{exit_time, exit_time_with, simulate, ExitSample, Gillespie, Trajectory, TrajectoryEvent};
pub use metropolis::RegionMetropolis;
pub use rates::{jump_rate, jump_rate_cfg, rate_bound, total_rate};
pub use rng::{Purpose, RngSpec};
