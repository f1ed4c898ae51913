//! The single-site law of the mixed measure given the rest of the field.
//!
//! At site `i` with neighbor heights `h_j` (zero for exterior and pinned
//! neighbors) the local energy is
//! `E(x) = 1/(4d) sum_j V(x - h_j) - eta_i x`, so the conditional law puts
//! mass `w0 = eps exp(-E(0))` on the atom and density `exp(-E(x))` on the line.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::potential::Potential;
use crate::quad;

use super::chain::ChainState;

/// Relative tolerance of the continuous mass for non-Gaussian potentials.
pub const MASS_REL_TOL: f64 = 1e-10;

/// Neighbor heights and field seen by one site.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalEnvironment {
    pub potential: Potential,
    /// `1/(4d)`.
    pub weight: f64,
    pub field: f64,
    /// One entry per lattice neighbor, `2d` in total.
    pub heights: Vec<f64>,
}

impl LocalEnvironment {
    pub fn gather(state: &ChainState, i: usize, params: &ModelParams) -> Self {
        let vol = &params.volume;
        let mut heights: Vec<f64> = vol.neighbors(i).iter().map(|&j| state.height(j)).collect();
        heights.resize(vol.coordination(), 0.0);
        Self {
            potential: params.potential,
            weight: params.edge_weight(),
            field: params.eta.values()[i],
            heights,
        }
    }

    pub fn energy(&self, x: f64) -> f64 {
        let v: f64 = self.heights.iter().map(|h| self.potential.value(x - h)).sum();
        self.weight * v - self.field * x
    }

    fn slope(&self, x: f64) -> f64 {
        let v: f64 = self.heights.iter().map(|h| self.potential.derivative(x - h)).sum();
        self.weight * v - self.field
    }

    fn curvature(&self, x: f64) -> f64 {
        let v: f64 = self.heights.iter().map(|h| self.potential.second_derivative(x - h)).sum();
        self.weight * v
    }

    /// Lower bound on `E''`, `2d/(4d) c_- = c_-/2`.
    fn curvature_floor(&self) -> f64 {
        self.weight * self.heights.len() as f64 * self.potential.c_minus()
    }

    /// Minimizer of the strictly convex local energy.
    fn mode(&self) -> f64 {
        let a = self.curvature_floor();
        let x0 = 0.0;
        let g0 = self.slope(x0);
        if g0 == 0.0 {
            return x0;
        }
        // E'' >= a puts the root within |E'(x0)|/a of x0
        let (mut lo, mut hi) = if g0 > 0.0 { (x0 - g0 / a, x0) } else { (x0, x0 - g0 / a) };
        let mut x = x0 - g0 / self.curvature(x0);
        for _ in 0..200 {
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
            }
            let g = self.slope(x);
            if g == 0.0 {
                return x;
            }
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = g / self.curvature(x);
            x -= step;
            if step.abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        x
    }
}

/// Continuous component of a [`MixedLaw`].
#[derive(Debug, Clone, PartialEq)]
pub enum Continuous {
    Normal { mean: f64, variance: f64 },
    /// Density `exp(-E(x))`, sampled by rejection from
    /// `exp(-E(mode) - a (x - mode)^2 / 2)` with `a` the curvature floor.
    Tilted {
        env: LocalEnvironment,
        mode: f64,
        energy_at_mode: f64,
        envelope_curvature: f64,
    },
}

/// Atom at zero plus a continuous part, both unnormalized, in log form.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedLaw {
    /// `ln w0`; `-inf` without pinning.
    pub ln_atom: f64,
    /// `ln int exp(-E(x)) dx`.
    pub ln_continuous: f64,
    pub pin_probability: f64,
    pub continuous: Continuous,
}

/// Outcome of one draw from a [`MixedLaw`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Draw {
    Pinned,
    Height(f64),
}

fn pin_probability(ln_atom: f64, ln_continuous: f64) -> f64 {
    if ln_atom == f64::NEG_INFINITY {
        return 0.0;
    }
    let d = ln_continuous - ln_atom;
    if d > 0.0 {
        let e = (-d).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + d.exp())
    }
}

impl MixedLaw {
    /// Closed form for `V(t) = c t^2/2`: `E(x) = a x^2/2 - b x + k` with
    /// `a = c/2`, `b = c/(4d) sum h + eta`, `k = c/(8d) sum h^2`.
    pub fn gaussian(
        curvature: f64,
        d: usize,
        field: f64,
        height_sum: f64,
        height_square_sum: f64,
        ln_epsilon: f64,
    ) -> Self {
        let w = 1.0 / (4.0 * d as f64);
        let a = 0.5 * curvature;
        let b = w * curvature * height_sum + field;
        let k = 0.5 * w * curvature * height_square_sum;
        let ln_atom = ln_epsilon - k;
        let ln_continuous = 0.5 * (2.0 * PI / a).ln() + b * b / (2.0 * a) - k;
        Self {
            ln_atom,
            ln_continuous,
            pin_probability: pin_probability(ln_atom, ln_continuous),
            continuous: Continuous::Normal {
                mean: b / a,
                variance: 1.0 / a,
            },
        }
    }

    /// Continuous mass by adaptive quadrature; valid for any potential in the crate.
    pub fn numeric(env: LocalEnvironment, ln_epsilon: f64) -> Result<Self> {
        let a = env.curvature_floor();
        let mode = env.mode();
        let e_mode = env.energy(mode);
        // E - E(mode) >= a t^2/2, so the tails beyond r are below exp(-45)
        let r = (90.0 / a).sqrt();
        let f = |x: f64| (-(env.energy(x) - e_mode)).exp();
        let fail = || Error::Quadrature {
            field: env.field,
            neighbors: env.heights.clone(),
        };
        let left = quad::integrate(f, mode - r, mode, MASS_REL_TOL, 0.0, 2000).map_err(|_| fail())?;
        let right = quad::integrate(f, mode, mode + r, MASS_REL_TOL, 0.0, 2000).map_err(|_| fail())?;
        let ln_continuous = -e_mode + (left.value + right.value).ln();
        let ln_atom = ln_epsilon - env.energy(0.0);
        Ok(Self {
            ln_atom,
            ln_continuous,
            pin_probability: pin_probability(ln_atom, ln_continuous),
            continuous: Continuous::Tilted {
                env,
                mode,
                energy_at_mode: e_mode,
                envelope_curvature: a,
            },
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw> {
        if self.pin_probability > 0.0 && rng.random::<f64>() < self.pin_probability {
            return Ok(Draw::Pinned);
        }
        self.sample_continuous(rng).map(Draw::Height)
    }

    pub fn sample_continuous<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match &self.continuous {
            Continuous::Normal { mean, variance } => {
                let z: f64 = rng.sample(StandardNormal);
                Ok(mean + variance.sqrt() * z)
            }
            Continuous::Tilted {
                env,
                mode,
                energy_at_mode,
                envelope_curvature,
            } => {
                let sd = envelope_curvature.sqrt().recip();
                loop {
                    let z: f64 = rng.sample(StandardNormal);
                    let x = mode + sd * z;
                    let log_ratio = energy_at_mode + 0.5 * z * z - env.energy(x);
                    if log_ratio > 1e-9 * (1.0 + energy_at_mode.abs()) {
                        return Err(Error::EnvelopeViolation { x, log_ratio });
                    }
                    if rng.random::<f64>().ln() < log_ratio {
                        return Ok(x);
                    }
                }
            }
        }
    }
}

fn ln_epsilon(params: &ModelParams) -> f64 {
    params.epsilon.ln()
}

/// Conditional law of site `i`; closed form for Gaussian potentials.
pub fn site_conditional(state: &ChainState, i: usize, params: &ModelParams) -> Result<MixedLaw> {
    match params.potential {
        Potential::Gaussian { curvature } => {
            let (mut s, mut s2) = (0.0, 0.0);
            for &j in params.volume.neighbors(i) {
                let h = state.height(j);
                s += h;
                s2 += h * h;
            }
            Ok(MixedLaw::gaussian(
                curvature,
                params.volume.dimension(),
                params.eta.values()[i],
                s,
                s2,
                ln_epsilon(params),
            ))
        }
        _ => site_conditional_numeric(state, i, params),
    }
}

/// Conditional law of site `i` by quadrature, whatever the potential.
pub fn site_conditional_numeric(
    state: &ChainState,
    i: usize,
    params: &ModelParams,
) -> Result<MixedLaw> {
    MixedLaw::numeric(LocalEnvironment::gather(state, i, params), ln_epsilon(params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::FieldConfig;
    use crate::lattice::Volume;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn single(eps: f64, eta: f64) -> ModelParams {
        let v = Volume::centered_box(2, 0).unwrap();
        let e = FieldConfig::constant(&v, eta);
        ModelParams::new(v, Potential::gaussian(1.0).unwrap(), eps, e).unwrap()
    }

    #[test]
    fn single_site_closed_forms() {
        let p = single(1.0, 0.0);
        let s = ChainState::new(1);
        let law = site_conditional(&s, 0, &p).unwrap();
        assert!((law.pin_probability - 1.0 / (1.0 + 2.0 * PI.sqrt())).abs() < 1e-15);
        assert_eq!(law.continuous, Continuous::Normal { mean: 0.0, variance: 2.0 });

        let law = site_conditional(&s, 0, &single(0.0, 0.0)).unwrap();
        assert_eq!(law.pin_probability, 0.0);

        let law = site_conditional(&s, 0, &single(1.0, 0.5)).unwrap();
        let expected = 1.0 / (1.0 + 2.0 * PI.sqrt() * 0.25f64.exp());
        assert!((law.pin_probability - expected).abs() < 1e-15);
        assert!((law.pin_probability - 0.180_123).abs() < 1e-6);
        match law.continuous {
            Continuous::Normal { mean, .. } => assert!((mean - 1.0).abs() < 1e-15),
            _ => panic!("expected closed form"),
        }
    }

    #[test]
    fn anharmonic_uses_quadrature() {
        let v = Volume::centered_box(2, 0).unwrap();
        let p = ModelParams::new(v.clone(), Potential::anharmonic(0.5).unwrap(), 1.0, FieldConfig::zeros(&v))
            .unwrap();
        let law = site_conditional(&ChainState::new(1), 0, &p).unwrap();
        assert!(matches!(law.continuous, Continuous::Tilted { .. }));
        // the trapezoid rule is spectrally accurate for this smooth, fast-decaying integrand
        let env = LocalEnvironment::gather(&ChainState::new(1), 0, &p);
        let h = 1e-3;
        let riemann: f64 = (-40_000..=40_000).map(|k| (-env.energy(k as f64 * h)).exp() * h).sum();
        assert!((law.ln_continuous - riemann.ln()).abs() < 1e-10);
    }

    #[test]
    fn rejection_draws_have_the_right_mean() {
        // eta shifts the mode; compare the sample mean with the quadrature mean
        let env = LocalEnvironment {
            potential: Potential::anharmonic(0.3).unwrap(),
            weight: 0.125,
            field: 0.7,
            heights: vec![1.0, -0.5, 0.0, 2.0],
        };
        let law = MixedLaw::numeric(env.clone(), f64::NEG_INFINITY).unwrap();
        let z = law.ln_continuous.exp();
        let m = quad::integrate(|x| x * (-env.energy(x)).exp(), -60.0, 60.0, 1e-12, 0.0, 2000)
            .unwrap()
            .value
            / z;
        let mut rng = stream(9, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| law.sample_continuous(&mut rng).unwrap()).collect();
        let est = crate::stats::Estimate::from_samples(&xs);
        assert!(est.z_score(m) < 4.0, "{est:?} vs {m}");
    }

    #[test]
    fn envelope_violation_is_reported() {
        let env = LocalEnvironment {
            potential: Potential::gaussian(1.0).unwrap(),
            weight: 0.125,
            field: 0.0,
            heights: vec![0.0; 4],
        };
        let mut law = MixedLaw::numeric(env, 0.0).unwrap();
        if let Continuous::Tilted { envelope_curvature, .. } = &mut law.continuous {
            // a proposal narrower than the target breaks domination
            *envelope_curvature *= 4.0;
        }
        let mut rng = stream(1, 0);
        let err = (0..1000).find_map(|_| law.sample_continuous(&mut rng).err());
        assert!(matches!(err, Some(Error::EnvelopeViolation { .. })));
    }

    proptest! {
        #[test]
        fn closed_form_matches_quadrature(
            heights in proptest::collection::vec(-4.0f64..4.0, 4),
            field in -3.0f64..3.0,
            ln_eps in -5.0f64..5.0,
            curvature in 0.2f64..3.0,
        ) {
            let s: f64 = heights.iter().sum();
            let s2: f64 = heights.iter().map(|h| h * h).sum();
            let exact = MixedLaw::gaussian(curvature, 2, field, s, s2, ln_eps);
            let env = LocalEnvironment {
                potential: Potential::gaussian(curvature).unwrap(),
                weight: 0.125,
                field,
                heights,
            };
            let num = MixedLaw::numeric(env, ln_eps).unwrap();
            prop_assert!((exact.pin_probability - num.pin_probability).abs() < 1e-9);
            prop_assert!((exact.ln_continuous - num.ln_continuous).abs() < 1e-9);
            prop_assert!((exact.ln_atom - num.ln_atom).abs() < 1e-12);
        }
    }
}
