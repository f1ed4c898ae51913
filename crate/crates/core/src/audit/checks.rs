//! Gaussian integration by parts over the disorder, and monotonicity in the
//! field strength and in the pinning strength.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::disorder::{DisorderLaw, FieldConfig};
use crate::error::{Error, Result};
use crate::gaussian::exact_mixed_solution;
use crate::lattice::Volume;
use crate::model::ModelParams;
use crate::potential::Potential;
use crate::sampler::{disorder_average, AverageConfig, EngineUsed, InnerEngine};

use super::bounds::model_inputs;
use super::report::BoundReport;

pub const GAUSSIAN_IBP: &str = "gaussian-ibp";
pub const FIELD_MONOTONICITY: &str = "field-monotonicity";
pub const PINNING_MONOTONICITY: &str = "pinning-monotonicity";

/// Allowed decrease between consecutive grid values.
pub const MONOTONICITY_TOLERANCE: f64 = 1e-10;

/// Compares `E sum_i eta_i mu(phi_i)` with `sigma^2 E sum_i Var mu(phi_i)`.
///
/// The report's `lhs` is `|difference|`, its `rhs` three combined standard
/// errors, so it holds when the two averages agree.
pub fn check_gaussian_ibp(
    template: &ModelParams,
    law: DisorderLaw,
    replicas: usize,
    master_seed: u64,
) -> Result<BoundReport> {
    let sigma = match law {
        DisorderLaw::Gaussian { sigma } => sigma,
        _ => return Err(Error::NonGaussianDisorder),
    };
    if !template.potential.is_gaussian() {
        return Err(Error::NonGaussianPotential);
    }
    let avg = disorder_average(
        template,
        law,
        &AverageConfig {
            replicas,
            master_seed,
            engine: InnerEngine::Exact,
            sampler: None,
            antithetic: false,
        },
    )?;
    let s2 = sigma * sigma;
    let overlap = avg.overlap;
    let variance = avg.variance_sum;
    let diff = (overlap.mean - s2 * variance.mean).abs();
    let combined = (overlap.stderr.powi(2) + (s2 * variance.stderr).powi(2)).sqrt();
    let inputs = json!({
        "volume": template.volume,
        "potential": template.potential,
        "epsilon": template.epsilon,
        "law": law.to_string(),
        "replicas": replicas,
        "master_seed": master_seed,
        "overlap": overlap,
        "variance_sum": variance,
    });
    // rounding only; the comparison itself is statistical
    let rounding = 1e-10 * overlap.mean.abs().max(1.0);
    Ok(BoundReport::new(GAUSSIAN_IBP, diff, 3.0 * combined, rounding, EngineUsed::Exact, inputs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotonicityMode {
    /// `h -> sum_i eta_i mu[h eta](phi_i)` at fixed pinning strength.
    Field,
    /// `eps -> sum_i mu_eps(phi_i = 0)` at fixed fields.
    Pinning,
}

/// Evaluates the monotone quantity on `grid` (ascending) with the exact engine.
///
/// The report's `lhs` is the largest decrease between consecutive grid points
/// and `rhs` is zero.
pub fn check_monotonicity(
    vol: &Volume,
    eta: &FieldConfig,
    curvature: f64,
    epsilon: f64,
    mode: MonotonicityMode,
    grid: &[f64],
) -> Result<BoundReport> {
    if grid.len() < 2 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("grid must be strictly increasing with two points".into()));
    }
    let values: Vec<f64> = grid
        .iter()
        .map(|&x| {
            Ok(match mode {
                MonotonicityMode::Field => {
                    let s = exact_mixed_solution(vol, &eta.scaled(x), epsilon, curvature)?;
                    eta.values().iter().zip(&s.mean).map(|(e, m)| e * m).sum()
                }
                MonotonicityMode::Pinning => {
                    exact_mixed_solution(vol, eta, x, curvature)?.expected_pinned()
                }
            })
        })
        .collect::<Result<_>>()?;
    let worst_drop = values
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::NEG_INFINITY, f64::max);
    let params = ModelParams::new(
        vol.clone(),
        Potential::gaussian(curvature)?,
        epsilon,
        eta.clone(),
    )?;
    let mut inputs = model_inputs(&params);
    inputs["mode"] = json!(mode);
    inputs["grid"] = json!(grid);
    let id = match mode {
        MonotonicityMode::Field => FIELD_MONOTONICITY,
        MonotonicityMode::Pinning => PINNING_MONOTONICITY,
    };
    Ok(
        BoundReport::new(id, worst_drop, 0.0, MONOTONICITY_TOLERANCE, EngineUsed::Exact, inputs)
            .with_series(grid.iter().zip(&values).map(|(&x, &v)| [x, v]).collect()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_field_sequence_is_flat() {
        let v = Volume::centered_box(2, 1).unwrap();
        let grid: Vec<f64> = (0..=10).map(|k| 0.2 * k as f64).collect();
        let r = check_monotonicity(&v, &FieldConfig::zeros(&v), 1.0, 1.0, MonotonicityMode::Field, &grid)
            .unwrap();
        assert!(r.holds);
        assert!(r.series.iter().all(|p| p[1] == 0.0));
    }

    #[test]
    fn single_site_pin_probability_increases() {
        let v = Volume::centered_box(2, 0).unwrap();
        let grid = [0.0, 0.5, 1.0, 2.0, 4.0];
        let r = check_monotonicity(&v, &FieldConfig::zeros(&v), 1.0, 0.0, MonotonicityMode::Pinning, &grid)
            .unwrap();
        assert!(r.holds && r.lhs < 0.0);
        for p in &r.series {
            assert!((p[1] - p[0] / (p[0] + 2.0 * PI.sqrt())).abs() < 1e-15);
        }
    }

    #[test]
    fn ibp_agrees_without_pinning() {
        let v = Volume::centered_box(2, 1).unwrap();
        let t = ModelParams::new(v.clone(), Potential::gaussian(1.0).unwrap(), 0.0, FieldConfig::zeros(&v))
            .unwrap();
        let r = check_gaussian_ibp(&t, DisorderLaw::Gaussian { sigma: 0.7 }, 50, 4).unwrap();
        assert!(r.holds);
        assert!(check_gaussian_ibp(&t, DisorderLaw::Rademacher { h: 1.0 }, 50, 4).is_err());
    }
}
