//! Simulation, exact Gaussian solution and inequality audits for continuous
//! lattice interfaces with delta-pinning at height zero and quenched random
//! fields.

pub mod audit;
pub mod disorder;
pub mod error;
pub mod gaussian;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod potential;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use disorder::{sample_disorder, DisorderLaw, FieldConfig};
pub use error::{Error, Result};
pub use lattice::Volume;
pub use model::{hamiltonian, ModelParams};
pub use potential::Potential;
