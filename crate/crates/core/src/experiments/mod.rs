//! Harnesses chaining the model, the dynamics and the spectral tools into
//! reports.

pub mod coupling;
pub mod exit;
pub mod gap;
pub mod output;
pub mod rn;
pub mod sampler;
pub mod stats;

pub use coupling::{coupling_fidelity, coupling_marginal, FidelityReport, MarginalCheck};
pub use exit::{exit_law_check, exit_time_scaling, ExitScalingConfig, ScalingReport};
pub use gap::{gap_scaling, GapScalingConfig, GapScalingReport};
pub use rn::{radon_nikodym_bound, RnReport};
pub use sampler::ConditionedSampler;
