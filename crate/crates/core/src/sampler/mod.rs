//! Single-site Gibbs sampling of the mixed measure.
//!
//! Each update draws pinned-vs-free from the exact two-component conditional
//! and then, if free, a height from its continuous part.

mod chain;
mod conditional;
mod estimate;
mod replicas;

pub use chain::{gibbs_sweep, Chain, ChainState};
pub use conditional::{
    site_conditional, site_conditional_numeric, Continuous, Draw, LocalEnvironment, MixedLaw,
    MASS_REL_TOL,
};
pub use estimate::{
    estimate_observables, estimate_observables_indexed, EstimatorResult, ObservableSet,
    SamplerConfig, SLOW_MIXING_Z,
};
pub use replicas::{
    disorder_average, exact_applicable, AverageConfig, DisorderAverage, EngineUsed, InnerEngine,
    ReplicaOutcome,
};
