//! Even pair potentials `V` with curvature bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Built-in pair potentials.
///
/// `Gaussian { curvature: c }` is `V(t) = c t^2 / 2`. `Anharmonic { kappa }` is
/// `V(t) = kappa t^2 / 2 + (1 - kappa) log cosh t`, which has
/// `kappa <= V'' <= 1` and quadratic growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Gaussian { curvature: f64 },
    Anharmonic { kappa: f64 },
}

impl Potential {
    pub fn gaussian(curvature: f64) -> Result<Self> {
        Self::Gaussian { curvature }.validated()
    }

    pub fn anharmonic(kappa: f64) -> Result<Self> {
        Self::Anharmonic { kappa }.validated()
    }

    /// Checks parameters, evenness and `V(0) = 0` on a grid.
    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Gaussian { curvature } if !(curvature > 0.0 && curvature.is_finite()) => {
                return Err(Error::InvalidParameter(format!(
                    "gaussian curvature must be positive, got {curvature}"
                )))
            }
            Self::Anharmonic { kappa } if !(kappa > 0.0 && kappa <= 1.0) => {
                return Err(Error::InvalidParameter(format!(
                    "kappa must lie in (0, 1], got {kappa}"
                )))
            }
            _ => {}
        }
        if self.value(0.0) != 0.0 {
            return Err(Error::InvalidParameter("V(0) must vanish".into()));
        }
        for k in 1..=200 {
            let t = 0.173 * k as f64;
            let (a, b) = (self.value(t), self.value(-t));
            if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                return Err(Error::InvalidParameter(format!("V is not even at t={t}")));
            }
        }
        Ok(self)
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Gaussian { curvature } => 0.5 * curvature * t * t,
            Self::Anharmonic { kappa } => 0.5 * kappa * t * t + (1.0 - kappa) * log_cosh(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Self::Gaussian { curvature } => curvature * t,
            Self::Anharmonic { kappa } => kappa * t + (1.0 - kappa) * t.tanh(),
        }
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        match *self {
            Self::Gaussian { curvature } => curvature,
            Self::Anharmonic { kappa } => {
                let th = t.tanh();
                kappa + (1.0 - kappa) * (1.0 - th * th)
            }
        }
    }

    /// `inf V''`.
    pub fn c_minus(&self) -> f64 {
        match *self {
            Self::Gaussian { curvature } => curvature,
            Self::Anharmonic { kappa } => kappa,
        }
    }

    /// `sup V''`.
    pub fn c_plus(&self) -> f64 {
        match *self {
            Self::Gaussian { curvature } => curvature,
            Self::Anharmonic { .. } => 1.0,
        }
    }

    /// `liminf log V(t) / log |t|`.
    pub fn growth_exponent(&self) -> f64 {
        2.0
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Self::Gaussian { .. })
    }
}

/// `log cosh t` without overflow for large `|t|`.
pub fn log_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}
