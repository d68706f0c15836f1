pub mod eigen;
pub mod expm;
pub mod forms;
pub mod gradient;
pub mod generator;
pub mod killed;
pub mod sym;

pub use eigen::{rayleigh_quotient, rayleigh_upper_bound, spectral_gap, EigenMethod, GapReport};
pub use generator::{build_generator, GeneratorOperator};
pub use killed::{KilledOperator, SurvivalFunction, SurvivalMethod, SurvivalReport};
pub use sym::SymOperator;
