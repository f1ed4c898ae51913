use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rng::{derive_seed, tags};
use crate::stats::{BatchMeans, Estimate};

use super::chain::Chain;

/// Batch means of the two chain halves further apart than this flag slow mixing.
pub const SLOW_MIXING_Z: f64 = 5.0;

/// Which observables a run records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableSet {
    /// Overlap and pinned fraction.
    Summary,
    /// Also per-site means and second moments.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Total sweeps, burn-in included.
    pub sweeps: usize,
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thinning: usize,
    pub batches: usize,
    pub seed: u64,
    #[serde(default = "full")]
    pub observables: ObservableSet,
}

fn one() -> usize {
    1
}

fn full() -> ObservableSet {
    ObservableSet::Full
}

impl SamplerConfig {
    pub fn new(sweeps: usize, burn_in: usize, batches: usize, seed: u64) -> Result<Self> {
        Self {
            sweeps,
            burn_in,
            thinning: 1,
            batches,
            seed,
            observables: ObservableSet::Full,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.batches < 8 {
            return Err(Error::InvalidParameter(format!(
                "at least 8 batches are required, got {}",
                self.batches
            )));
        }
        if self.burn_in >= self.sweeps {
            return Err(Error::InvalidParameter(format!(
                "burn-in {} must be below the sweep count {}",
                self.burn_in, self.sweeps
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidParameter("thinning must be positive".into()));
        }
        if self.recorded() < self.batches {
            return Err(Error::InsufficientSweeps {
                recorded: self.recorded(),
                batches: self.batches,
            });
        }
        Ok(self)
    }

    /// Number of recorded sweeps after burn-in and thinning.
    pub fn recorded(&self) -> usize {
        (self.sweeps - self.burn_in.min(self.sweeps)) / self.thinning.max(1)
    }
}

/// Batch-means estimates from one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    /// `sum_i eta_i mu(phi_i)`.
    pub overlap: Estimate,
    /// `|Lambda|^{-1} sum_i mu(phi_i = 0)`.
    pub pinned_fraction: Estimate,
    /// Empty unless the full observable set was requested.
    pub site_means: Vec<Estimate>,
    pub site_second_moments: Vec<Estimate>,
    pub batches: usize,
    pub batch_len: usize,
    pub sweeps: usize,
    pub seed: u64,
    /// Largest half-split separation over all observables.
    pub max_half_split_z: f64,
    pub slow_mixing: bool,
}

impl EstimatorResult {
    /// All estimates with stable names, in output order.
    pub fn named(&self) -> Vec<(String, Estimate)> {
        let mut out = vec![
            ("overlap".to_string(), self.overlap),
            ("pinned_fraction".to_string(), self.pinned_fraction),
        ];
        out.extend(self.site_means.iter().enumerate().map(|(i, e)| (format!("mean[{i}]"), *e)));
        out.extend(
            self.site_second_moments
                .iter()
                .enumerate()
                .map(|(i, e)| (format!("second_moment[{i}]"), *e)),
        );
        out
    }
}

/// Runs one chain seeded from `config.seed`.
pub fn estimate_observables(params: &ModelParams, config: &SamplerConfig) -> Result<EstimatorResult> {
    estimate_observables_indexed(params, config, 0)
}

/// Runs chain number `index` of the family keyed by `config.seed`.
pub fn estimate_observables_indexed(
    params: &ModelParams,
    config: &SamplerConfig,
    index: u64,
) -> Result<EstimatorResult> {
    let config = config.clone().validated()?;
    let n = params.volume.len();
    let full = config.observables == ObservableSet::Full;
    let width = if full { 2 + 2 * n } else { 2 };
    let recorded = config.recorded();
    let mut bm = BatchMeans::new(width, recorded, config.batches);
    let mut chain = Chain::new(params.clone(), derive_seed(config.seed, tags::CHAIN, index));
    let eta = params.eta.values();
    let mut obs = vec![0.0; width];
    for _ in 0..config.burn_in {
        chain.sweep()?;
    }
    for _ in 0..recorded {
        for _ in 0..config.thinning {
            chain.sweep()?;
        }
        let s = chain.state();
        let h = s.heights();
        obs[0] = eta.iter().zip(h).map(|(e, x)| e * x).sum();
        obs[1] = s.pinned_count() as f64 / n as f64;
        if full {
            obs[2..2 + n].copy_from_slice(h);
            for (o, x) in obs[2 + n..].iter_mut().zip(h) {
                *o = x * x;
            }
        }
        bm.push(&obs);
    }
    let est = bm.estimates();
    let max_z = (0..width)
        .map(|k| bm.half_split_z(k))
        .fold(0.0f64, |a, b| if b.is_nan() { a } else { a.max(b) });
    Ok(EstimatorResult {
        overlap: est[0],
        pinned_fraction: est[1],
        site_means: if full { est[2..2 + n].to_vec() } else { vec![] },
        site_second_moments: if full { est[2 + n..].to_vec() } else { vec![] },
        batches: bm.batches(),
        batch_len: bm.batch_len(),
        sweeps: config.sweeps,
        seed: config.seed,
        max_half_split_z: max_z,
        slow_mixing: max_z > SLOW_MIXING_Z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::FieldConfig;
    use crate::lattice::Volume;
    use crate::potential::Potential;

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::new(1000, 100, 7, 0).is_err());
        assert!(SamplerConfig::new(1000, 1000, 8, 0).is_err());
        assert!(matches!(
            SamplerConfig::new(10, 5, 8, 0),
            Err(Error::InsufficientSweeps { recorded: 5, batches: 8 })
        ));
        let c = SamplerConfig::new(1000, 100, 10, 0).unwrap();
        assert_eq!(c.recorded(), 900);
    }

    #[test]
    fn estimates_are_reproducible() {
        let v = Volume::centered_box(2, 1).unwrap();
        let eta = FieldConfig::constant(&v, 0.2);
        let p = ModelParams::new(v, Potential::gaussian(1.0).unwrap(), 0.5, eta).unwrap();
        let c = SamplerConfig::new(2000, 200, 10, 77).unwrap();
        let a = estimate_observables(&p, &c).unwrap();
        let b = estimate_observables(&p, &c).unwrap();
        assert_eq!(a, b);
        assert!(a.pinned_fraction.mean >= 0.0 && a.pinned_fraction.mean <= 1.0);
        assert!(a.named().iter().all(|(_, e)| e.stderr >= 0.0));
        assert_eq!(a.named().len(), 20);
        let other = estimate_observables_indexed(&p, &c, 1).unwrap();
        assert_ne!(a.overlap, other.overlap);
    }

    #[test]
    fn summary_skips_site_observables() {
        let v = Volume::centered_box(2, 1).unwrap();
        let p = ModelParams::new(v.clone(), Potential::gaussian(1.0).unwrap(), 0.5, FieldConfig::zeros(&v))
            .unwrap();
        let mut c = SamplerConfig::new(400, 0, 8, 1).unwrap();
        c.observables = ObservableSet::Summary;
        let r = estimate_observables(&p, &c).unwrap();
        assert!(r.site_means.is_empty());
        assert_eq!(r.overlap, Estimate::exact(0.0));
    }
}
