//! Concrete values for the per-site constants of the bounds.
//!
//! `c_G = sqrt(2 pi)` holds for every volume because all eigenvalues of the
//! curvature-1 precision matrix are at most 1. The upper constants are read
//! off exact box spectra: the largest per-site partition function over the
//! sweep times [`SAFETY_FACTOR`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{box_spectrum, infinite_volume_green_origin};
use crate::potential::Potential;

pub const SAFETY_FACTOR: f64 = 1.05;

/// Relative change between the last two sweep entries accepted as stable.
pub const STABILITY_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    Empirical {
        d: usize,
        sweep: Vec<u32>,
        safety_factor: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub value: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub d: usize,
    pub c_minus: f64,
    /// Lower per-site constant of the zero-field Gaussian partition function.
    pub c_g: Constant,
    /// Upper per-site constant of the zero-field, unpinned partition function.
    pub c_ng: Constant,
    /// Upper per-site constant of the zero-field curvature-1 Gaussian partition function.
    pub c_gauss_upper: Constant,
    /// `Z^{1/|Lambda|}` of the curvature-1 Gaussian on each box of the sweep.
    pub per_site_gaussian: Vec<f64>,
    /// The same for the curvature-`c_minus` comparison measure.
    pub per_site_comparison: Vec<f64>,
    /// `G(0,0)` on `Z^d`, for `d >= 3`.
    pub green_origin: Option<f64>,
}

impl BoundConstants {
    /// `C_nG / c_G`.
    pub fn b1(&self) -> f64 {
        self.c_ng.value / self.c_g.value
    }

    /// `1 / c_G`.
    pub fn b2(&self) -> f64 {
        1.0 / self.c_g.value
    }

    /// Volume-free term of the pinned-fraction bound at `epsilon0 = 1`:
    /// `-1/2 log c_- + log(1 + sqrt(c_-/(2 pi))) + log C_G`.
    pub fn c1(&self) -> f64 {
        -0.5 * self.c_minus.ln() + (1.0 + (self.c_minus / (2.0 * PI)).sqrt()).ln()
            + self.c_gauss_upper.value.ln()
    }

    /// Coefficient of `E eta_0^2` in the pinned-fraction bound, `G(0,0) / (2 c_-)`.
    pub fn c2(&self) -> Option<f64> {
        self.green_origin.map(|g| g / (2.0 * self.c_minus))
    }

    /// Named constants for reports.
    pub fn named(&self) -> Vec<(&'static str, Constant)> {
        vec![
            ("c_G", self.c_g.clone()),
            ("C_nG", self.c_ng.clone()),
            ("C_G", self.c_gauss_upper.clone()),
        ]
    }
}

/// Per-site `Z^{1/|Lambda_L|}` of the curvature-1 zero-field Gaussian.
pub fn per_site_gaussian(d: usize, half_width: u32) -> Result<f64> {
    let s = box_spectrum(d, half_width)?;
    Ok((0.5 * (2.0 * PI).ln() - 0.5 * s.log_det / s.sites as f64).exp())
}

/// Default sweep `L = 0..=4`; the last two entries agree within 1% in d = 2 and 3.
pub fn default_sweep() -> Vec<u32> {
    (0..=4).collect()
}

pub fn estimate_constants(pot: &Potential, d: usize, sweep: &[u32]) -> Result<BoundConstants> {
    if sweep.len() < 2 || sweep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "the constant sweep needs at least two strictly increasing L".into(),
        ));
    }
    let c_minus = pot.c_minus();
    let gauss: Vec<f64> = sweep
        .iter()
        .map(|&l| per_site_gaussian(d, l))
        .collect::<Result<_>>()?;
    // V >= c_- t^2/2 bounds the unpinned partition function by the
    // curvature-c_- Gaussian, whose per-site value is c_-^{-1/2} times the above
    let comparison: Vec<f64> = gauss.iter().map(|g| g / c_minus.sqrt()).collect();
    let (prev, last) = (gauss[gauss.len() - 2], gauss[gauss.len() - 1]);
    if (last - prev).abs() > STABILITY_TOLERANCE * prev.abs() {
        return Err(Error::ConstantsNotStabilized { previous: prev, last });
    }
    let empirical = |values: &[f64]| Constant {
        value: SAFETY_FACTOR * values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        provenance: Provenance::Empirical {
            d,
            sweep: sweep.to_vec(),
            safety_factor: SAFETY_FACTOR,
        },
    };
    Ok(BoundConstants {
        d,
        c_minus,
        c_g: Constant {
            value: (2.0 * PI).sqrt(),
            provenance: Provenance::Analytic,
        },
        c_ng: empirical(&comparison),
        c_gauss_upper: empirical(&gauss),
        per_site_gaussian: gauss,
        per_site_comparison: comparison,
        green_origin: if d >= 3 {
            Some(infinite_volume_green_origin(d)?)
        } else {
            None
        },
    })
}
