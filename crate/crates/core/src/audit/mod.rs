//! Both sides of the inequalities of the model, evaluated on concrete volumes
//! with concrete constants, and the volume scans behind the growth claims.

mod bounds;
mod checks;
mod constants;
mod report;
mod scans;

pub use bounds::{
    audit_overlap_bound, audit_pinning_bound, green_quadratic_form, pinning_lower_bound,
    AuditEngine, MCMC_SIGMAS, OVERLAP_BOUND, PINNING_BOUND,
};
pub use checks::{
    check_gaussian_ibp, check_monotonicity, MonotonicityMode, FIELD_MONOTONICITY, GAUSSIAN_IBP,
    MONOTONICITY_TOLERANCE, PINNING_MONOTONICITY,
};
pub use constants::{
    default_sweep, estimate_constants, per_site_gaussian, BoundConstants, Constant, Provenance,
    SAFETY_FACTOR, STABILITY_TOLERANCE,
};
pub use report::{digest, BoundReport, StepReport, EXACT_TOLERANCE};
pub use scans::{
    comparison_stability, overlap_comparison_curve, scan_constant_field, scan_overlap_dgeq3,
    scan_overlap_scaling_d2, Normalization, ScalingScanResult, ScanPoint, ScanSettings, Verdict,
    COMPARISON_STABILITY, EXPONENT_TOLERANCE,
};
