//! Exact linear algebra for the Gaussian potential.

mod expansion;
mod green;
mod partition;
mod precision;
mod scaling;

pub use expansion::{exact_mixed_solution, exact_mixed_solution_ln, ExactSolution, MAX_EXPANSION_SITES};
pub use green::{box_spectrum, green_diagonal_scan, infinite_volume_green_origin, BoxSpectrum, GreenRow, GreenScan};
pub use partition::{gaussian_log_partition, GaussianSummary};
pub use precision::{green_matrix, precision_matrix, GreenMatrix, PrecisionMatrix, CG_TOLERANCE, DENSE_LIMIT};
pub use scaling::{scaling_identity_check, ScalingCheck};
