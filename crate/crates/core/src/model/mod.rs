pub mod catalog;
pub mod config;
pub mod energy;
pub mod enumerate;
pub mod geometry;
pub mod params;

pub use catalog::{DecayReport, PotentialCatalog, PotentialShape};
pub use config::{Configuration, Direction, GradientConfiguration, Move};
pub use energy::{gradient_log_weight, hamiltonian, log_weight, long_range_energy};
pub use enumerate::{partition_function, EnumeratedMeasure, PartitionReport, StateSpace};
pub use geometry::{attached_sites, DualSite};
pub use params::{HeightBound, MeasureKind, ModelParams, Strip};
