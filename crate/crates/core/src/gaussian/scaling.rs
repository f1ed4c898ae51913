use serde::{Deserialize, Serialize};

use crate::disorder::FieldConfig;
use crate::error::{Error, Result};
use crate::lattice::Volume;

use super::expansion::exact_mixed_solution;

/// Two evaluations of the curvature-`c` pinned Gaussian partition function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    /// `log Z^{c}_{eps}[eta]` computed at curvature `c`.
    pub direct: f64,
    /// `-|Lambda|/2 log c + log Z^{1}_{eps sqrt(c)}[eta / sqrt(c)]`.
    pub substituted: f64,
    /// `|direct - substituted| / max(1, |direct|)`.
    pub discrepancy: f64,
}

/// Removes the curvature by `phi = psi / sqrt(c)`; each site contributes one
/// factor `c^{-1/2}` and the atom weight becomes `eps sqrt(c)`.
pub fn scaling_identity_check(
    vol: &Volume,
    eta: &FieldConfig,
    epsilon0: f64,
    c_minus: f64,
) -> Result<ScalingCheck> {
    if !(c_minus > 0.0) {
        return Err(Error::InvalidParameter(format!("c_minus must be positive, got {c_minus}")));
    }
    let direct = exact_mixed_solution(vol, eta, epsilon0, c_minus)?.log_z;
    let root = c_minus.sqrt();
    let rescaled = exact_mixed_solution(vol, &eta.scaled(1.0 / root), epsilon0 * root, 1.0)?;
    let substituted = -0.5 * vol.len() as f64 * c_minus.ln() + rescaled.log_z;
    Ok(ScalingCheck {
        direct,
        substituted,
        discrepancy: (direct - substituted).abs() / direct.abs().max(1.0),
    })
}
