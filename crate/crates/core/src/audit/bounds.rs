//! The overlap lower bound at fixed fields and the pinned-fraction lower bound.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::disorder::FieldConfig;
use crate::error::{Error, Result};
use crate::gaussian::{exact_mixed_solution, green_matrix, precision_matrix};
use crate::model::ModelParams;
use crate::potential::Potential;
use crate::sampler::{estimate_observables, EngineUsed, SamplerConfig};

use super::constants::BoundConstants;
use super::report::{BoundReport, StepReport, EXACT_TOLERANCE};

pub const OVERLAP_BOUND: &str = "overlap-lower-bound";
pub const PINNING_BOUND: &str = "pinned-fraction-lower-bound";

/// Statistical margin, in standard errors, granted to sampler-based reports.
pub const MCMC_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditEngine {
    Exact,
    Mcmc(SamplerConfig),
}

pub(crate) fn model_inputs(params: &ModelParams) -> serde_json::Value {
    json!({
        "volume": params.volume,
        "potential": params.potential,
        "epsilon": params.epsilon,
        "eta": params.eta,
    })
}

/// `eta^T G eta` with `G` the curvature-1 Green's function of the whole volume.
pub fn green_quadratic_form(params: &ModelParams) -> Result<f64> {
    green_matrix(&precision_matrix(&params.volume, &[], 1.0)?)?.quadratic_form(params.eta.values())
}

fn gaussian_curvature(pot: &Potential) -> Result<f64> {
    match *pot {
        Potential::Gaussian { curvature } => Ok(curvature),
        _ => Err(Error::NonGaussianPotential),
    }
}

/// Audits `1/2 eta^T G eta - |Lambda| log((C_nG + eps)/c_G) <= sum_i eta_i mu(phi_i)`.
///
/// With the exact engine the bound is split into three links whose slacks add
/// up to the total:
/// `log Z[eta] - log Z[0] <= overlap` (convexity in the field strength),
/// `1/2 eta^T G eta + |Lambda| log c_G <= log Z[eta]` (dropping the atom and
/// comparing with the curvature-1 Gaussian), and
/// `log Z[0] <= |Lambda| log(C_nG + eps)`.
pub fn audit_overlap_bound(
    params: &ModelParams,
    constants: &BoundConstants,
    engine: &AuditEngine,
) -> Result<BoundReport> {
    if params.potential.c_plus() > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(
            "the overlap bound needs sup V'' <= 1".into(),
        ));
    }
    let n = params.volume.len() as f64;
    let q = green_quadratic_form(params)?;
    let (c_g, c_ng) = (constants.c_g.value, constants.c_ng.value);
    let lhs = 0.5 * q - n * ((c_ng + params.epsilon) / c_g).ln();
    let inputs = model_inputs(params);
    match engine {
        AuditEngine::Exact => {
            let c = gaussian_curvature(&params.potential)?;
            let vol = &params.volume;
            let with = exact_mixed_solution(vol, &params.eta, params.epsilon, c)?;
            let without = exact_mixed_solution(vol, &FieldConfig::zeros(vol), params.epsilon, c)?;
            let steps = vec![
                StepReport::new("convexity", with.log_z - without.log_z, with.overlap),
                StepReport::new("gaussian-comparison", 0.5 * q + n * c_g.ln(), with.log_z),
                StepReport::new("denominator", without.log_z, n * (c_ng + params.epsilon).ln()),
            ];
            Ok(BoundReport::new(OVERLAP_BOUND, lhs, with.overlap, EXACT_TOLERANCE, EngineUsed::Exact, inputs)
                .with_constants(constants)
                .with_steps(steps))
        }
        AuditEngine::Mcmc(cfg) => {
            let est = estimate_observables(params, cfg)?;
            Ok(BoundReport::new(
                OVERLAP_BOUND,
                lhs,
                est.overlap.mean,
                MCMC_SIGMAS * est.overlap.stderr,
                EngineUsed::Mcmc,
                inputs,
            )
            .with_constants(constants))
        }
    }
}

/// `(1/log(eps/eps0)) (log(eps sqrt(c_-) / ((1 + eps0 sqrt(c_-/(2 pi))) C_G)) - q/(2 c_- |Lambda|))`,
/// with both strengths given by their logarithms.
pub fn pinning_lower_bound(
    ln_eps: f64,
    ln_eps0: f64,
    c_minus: f64,
    c_gauss_upper: f64,
    quadratic_form: f64,
    sites: usize,
) -> f64 {
    let eps0 = ln_eps0.exp();
    let numerator = ln_eps + 0.5 * c_minus.ln()
        - (1.0 + eps0 * (c_minus / (2.0 * PI)).sqrt()).ln()
        - c_gauss_upper.ln()
        - quadratic_form / (2.0 * c_minus * sites as f64);
    numerator / (ln_eps - ln_eps0)
}

/// Audits the pinned-fraction lower bound at fixed fields.
///
/// With the exact engine the three links are `|Lambda| log eps <= log Z_eps`
/// (the all-pinned term), `log Z_eps - log Z_eps0 <= |Lambda| f(eps) log(eps/eps0)`
/// (the pinned fraction `f` is nondecreasing in the strength), and the upper
/// bound on `log Z_eps0` from comparison with the curvature-`c_-` Gaussian.
/// Their slacks add up to `|Lambda| log(eps/eps0)` times the final slack.
pub fn audit_pinning_bound(
    params: &ModelParams,
    epsilon0: f64,
    constants: &BoundConstants,
    engine: &AuditEngine,
) -> Result<BoundReport> {
    let eps = params.epsilon;
    if !(epsilon0 > 0.0 && eps > epsilon0) {
        return Err(Error::EpsilonOrder {
            epsilon: eps,
            epsilon0,
        });
    }
    let c_minus = params.potential.c_minus();
    let c_up = constants.c_gauss_upper.value;
    let sites = params.volume.len();
    let n = sites as f64;
    let q = green_quadratic_form(params)?;
    let lhs = pinning_lower_bound(eps.ln(), epsilon0.ln(), c_minus, c_up, q, sites);
    let mut inputs = model_inputs(params);
    inputs["epsilon0"] = json!(epsilon0);
    match engine {
        AuditEngine::Exact => {
            let c = gaussian_curvature(&params.potential)?;
            let vol = &params.volume;
            let at = exact_mixed_solution(vol, &params.eta, eps, c)?;
            let base = exact_mixed_solution(vol, &params.eta, epsilon0, c)?;
            let f = at.pinned_fraction;
            let upper = n * (1.0 + epsilon0 * (c_minus / (2.0 * PI)).sqrt()).ln()
                + q / (2.0 * c_minus)
                - 0.5 * n * c_minus.ln()
                + n * c_up.ln();
            let steps = vec![
                StepReport::new("all-pinned", n * eps.ln(), at.log_z),
                StepReport::new(
                    "monotone-integration",
                    at.log_z - base.log_z,
                    n * f * (eps / epsilon0).ln(),
                ),
                StepReport::new("gaussian-upper-bound", base.log_z, upper),
            ];
            Ok(BoundReport::new(PINNING_BOUND, lhs, f, EXACT_TOLERANCE, EngineUsed::Exact, inputs)
                .with_constants(constants)
                .with_steps(steps))
        }
        AuditEngine::Mcmc(cfg) => {
            let est = estimate_observables(params, cfg)?;
            Ok(BoundReport::new(
                PINNING_BOUND,
                lhs,
                est.pinned_fraction.mean,
                MCMC_SIGMAS * est.pinned_fraction.stderr,
                EngineUsed::Mcmc,
                inputs,
            )
            .with_constants(constants))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::constants::{default_sweep, estimate_constants};
    use crate::lattice::Volume;

    fn constants() -> BoundConstants {
        estimate_constants(&Potential::gaussian(1.0).unwrap(), 2, &default_sweep()).unwrap()
    }

    fn params(vol: Volume, eps: f64, eta: FieldConfig) -> ModelParams {
        ModelParams::new(vol, Potential::gaussian(1.0).unwrap(), eps, eta).unwrap()
    }

    #[test]
    fn zero_field_overlap_bound() {
        let v = Volume::centered_box(2, 1).unwrap();
        let c = constants();
        for eps in [0.0, 1.0, 10.0] {
            let r = audit_overlap_bound(&params(v.clone(), eps, FieldConfig::zeros(&v)), &c, &AuditEngine::Exact)
                .unwrap();
            assert!(r.lhs <= 0.0 && r.rhs == 0.0 && r.holds);
            let total: f64 = r.steps.iter().map(|s| s.slack).sum();
            assert!((total - r.slack).abs() < 1e-9 * r.slack.abs().max(1.0));
        }
    }

    #[test]
    fn pinning_bound_on_a_single_site() {
        let v = Volume::centered_box(2, 0).unwrap();
        let c = constants();
        let eps = 20f64.exp();
        let r = audit_pinning_bound(&params(v.clone(), eps, FieldConfig::zeros(&v)), 1.0, &c, &AuditEngine::Exact)
            .unwrap();
        let exact = eps / (eps + 2.0 * PI.sqrt());
        assert!((r.rhs - exact).abs() < 1e-15);
        assert!((1.0 - r.rhs - 7.3e-9).abs() < 1e-10);
        let expected =
            (20.0 - ((1.0 + 1.0 / (2.0 * PI).sqrt()) * c.c_gauss_upper.value).ln()) / 20.0;
        assert!((r.lhs - expected).abs() < 1e-14);
        assert!(r.lhs < 1.0 && r.holds);
        let total: f64 = r.steps.iter().map(|s| s.slack).sum();
        assert!((total - 20.0 * r.slack).abs() < 1e-9);
    }

    #[test]
    fn pinning_bound_rejects_bad_order() {
        let v = Volume::centered_box(2, 0).unwrap();
        let p = params(v.clone(), 1.0, FieldConfig::zeros(&v));
        assert!(matches!(
            audit_pinning_bound(&p, 1.0, &constants(), &AuditEngine::Exact),
            Err(Error::EpsilonOrder { .. })
        ));
        assert!(audit_pinning_bound(&p, 0.0, &constants(), &AuditEngine::Exact).is_err());
    }

    #[test]
    fn overlap_bound_needs_bounded_curvature() {
        let v = Volume::centered_box(2, 0).unwrap();
        let p = ModelParams::new(v.clone(), Potential::gaussian(2.0).unwrap(), 1.0, FieldConfig::zeros(&v))
            .unwrap();
        assert!(audit_overlap_bound(&p, &constants(), &AuditEngine::Exact).is_err());
    }
}
