pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod spectral;

pub use error::{Result, SosError};
