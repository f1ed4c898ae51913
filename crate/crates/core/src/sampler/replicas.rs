//! Quenched averages over independent disorder replicas.
//!
//! Replica `r` draws its fields from the seed `derive_seed(master, REPLICA, r)`
//! and, when sampled, runs chain `r` of the family keyed by `master`. Replicas
//! run in parallel and are reduced in index order, so the result does not
//! depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{sample_disorder, DisorderLaw};
use crate::error::{Error, Result};
use crate::gaussian::{exact_mixed_solution, MAX_EXPANSION_SITES};
use crate::model::ModelParams;
use crate::potential::Potential;
use crate::rng::{derive_seed, tags};
use crate::stats::Estimate;

use super::estimate::{estimate_observables_indexed, ObservableSet, SamplerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerEngine {
    /// Exact whenever the potential is Gaussian and the expansion fits.
    Auto,
    Exact,
    Mcmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineUsed {
    Exact,
    Mcmc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageConfig {
    pub replicas: usize,
    pub master_seed: u64,
    pub engine: InnerEngine,
    /// Required when the sampler may run; its seed is ignored in favor of `master_seed`.
    pub sampler: Option<SamplerConfig>,
    /// Pairs replica `2k+1` with the sign-flipped fields of replica `2k`.
    pub antithetic: bool,
}

/// Inner estimates for one disorder draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaOutcome {
    pub replica: usize,
    pub disorder_seed: u64,
    pub engine: EngineUsed,
    pub overlap: Estimate,
    pub pinned_fraction: Estimate,
    /// `sum_i Var mu(phi_i)`; a plug-in value under the sampler.
    pub variance_sum: f64,
    /// `sum_i eta_i^2`.
    pub field_square_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderAverage {
    pub overlap: Estimate,
    pub pinned_fraction: Estimate,
    pub variance_sum: Estimate,
    /// Independent units behind the error bars: replicas, or antithetic pairs.
    pub units: usize,
    pub replicas: Vec<ReplicaOutcome>,
}

/// Whether the exact engine can handle `params` (Gaussian potential, and
/// either no pinning or a volume within the enumeration limit).
pub fn exact_applicable(params: &ModelParams) -> bool {
    params.potential.is_gaussian()
        && (params.epsilon == 0.0 || params.volume.len() <= MAX_EXPANSION_SITES)
}

/// Averages over `config.replicas` draws of `law`; `template.eta` is ignored.
pub fn disorder_average(
    template: &ModelParams,
    law: DisorderLaw,
    config: &AverageConfig,
) -> Result<DisorderAverage> {
    let law = law.validated()?;
    if config.replicas < 2 {
        return Err(Error::InvalidParameter(format!(
            "at least two replicas are required, got {}",
            config.replicas
        )));
    }
    if config.antithetic && config.replicas % 2 != 0 {
        return Err(Error::InvalidParameter("antithetic mode needs an even replica count".into()));
    }
    let engine = match config.engine {
        InnerEngine::Auto if exact_applicable(template) => EngineUsed::Exact,
        InnerEngine::Exact => {
            if !template.potential.is_gaussian() {
                return Err(Error::NonGaussianPotential);
            }
            EngineUsed::Exact
        }
        _ => EngineUsed::Mcmc,
    };
    let sampler = match (engine, &config.sampler) {
        (EngineUsed::Mcmc, None) => {
            return Err(Error::InvalidParameter("sampler settings are required for MCMC replicas".into()))
        }
        (_, s) => s.clone().map(|mut s| {
            s.seed = config.master_seed;
            s.observables = ObservableSet::Full;
            s
        }),
    };
    let replicas: Vec<ReplicaOutcome> = (0..config.replicas)
        .into_par_iter()
        .map(|r| run_replica(template, law, config, engine, sampler.as_ref(), r))
        .collect::<Result<_>>()?;

    let unit_values = |f: &dyn Fn(&ReplicaOutcome) -> f64| -> Vec<f64> {
        if config.antithetic {
            replicas.chunks(2).map(|p| 0.5 * (f(&p[0]) + f(&p[1]))).collect()
        } else {
            replicas.iter().map(f).collect()
        }
    };
    let overlap = Estimate::from_samples(&unit_values(&|r| r.overlap.mean));
    let pinned_fraction = Estimate::from_samples(&unit_values(&|r| r.pinned_fraction.mean));
    let variance_sum = Estimate::from_samples(&unit_values(&|r| r.variance_sum));
    Ok(DisorderAverage {
        overlap,
        pinned_fraction,
        variance_sum,
        units: if config.antithetic { config.replicas / 2 } else { config.replicas },
        replicas,
    })
}

fn run_replica(
    template: &ModelParams,
    law: DisorderLaw,
    config: &AverageConfig,
    engine: EngineUsed,
    sampler: Option<&SamplerConfig>,
    r: usize,
) -> Result<ReplicaOutcome> {
    let draw = if config.antithetic { r / 2 } else { r };
    let disorder_seed = derive_seed(config.master_seed, tags::REPLICA, draw as u64);
    let mut eta = sample_disorder(law, &template.volume, disorder_seed)?;
    if config.antithetic && r % 2 == 1 {
        eta = eta.negated();
    }
    let field_square_sum = eta.values().iter().map(|e| e * e).sum();
    let params = template.with_eta(eta)?;
    match engine {
        EngineUsed::Exact => {
            let curvature = match params.potential {
                Potential::Gaussian { curvature } => curvature,
                _ => return Err(Error::NonGaussianPotential),
            };
            let s = exact_mixed_solution(&params.volume, &params.eta, params.epsilon, curvature)?;
            Ok(ReplicaOutcome {
                replica: r,
                disorder_seed,
                engine,
                overlap: Estimate::exact(s.overlap),
                pinned_fraction: Estimate::exact(s.pinned_fraction),
                variance_sum: s.variance_sum(),
                field_square_sum,
            })
        }
        EngineUsed::Mcmc => {
            let cfg = sampler.expect("checked by the caller");
            let e = estimate_observables_indexed(&params, cfg, r as u64)?;
            let variance_sum = e
                .site_means
                .iter()
                .zip(&e.site_second_moments)
                .map(|(m, s)| s.mean - m.mean * m.mean)
                .sum();
            Ok(ReplicaOutcome {
                replica: r,
                disorder_seed,
                engine,
                overlap: e.overlap,
                pinned_fraction: e.pinned_fraction,
                variance_sum,
                field_square_sum,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::FieldConfig;
    use crate::gaussian::{green_matrix, precision_matrix};
    use crate::lattice::Volume;

    fn template(l: u32, eps: f64) -> ModelParams {
        let v = Volume::centered_box(2, l).unwrap();
        let eta = FieldConfig::zeros(&v);
        ModelParams::new(v, Potential::gaussian(1.0).unwrap(), eps, eta).unwrap()
    }

    fn exact(replicas: usize, seed: u64, antithetic: bool) -> AverageConfig {
        AverageConfig {
            replicas,
            master_seed: seed,
            engine: InnerEngine::Exact,
            sampler: None,
            antithetic,
        }
    }

    #[test]
    fn zero_disorder_gives_zero_overlap() {
        let a = disorder_average(&template(1, 1.0), DisorderLaw::Zero, &exact(4, 1, false)).unwrap();
        assert_eq!(a.overlap, Estimate::exact(0.0));
    }

    #[test]
    fn unpinned_overlap_is_the_green_trace() {
        // 4x4 box, eps = 0: E sum eta_i (G eta)_i = sigma^2 tr G
        let v = Volume::rectangle(&[4, 4]).unwrap();
        let t = ModelParams::new(v.clone(), Potential::gaussian(1.0).unwrap(), 0.0, FieldConfig::zeros(&v))
            .unwrap();
        let a = disorder_average(&t, DisorderLaw::Gaussian { sigma: 1.0 }, &exact(200, 5, false)).unwrap();
        let g = green_matrix(&precision_matrix(&v, &[], 1.0).unwrap()).unwrap();
        let trace: f64 = g.diagonal().unwrap().iter().sum();
        assert!(a.overlap.z_score(trace) < 3.0, "{:?} vs {trace}", a.overlap);
        assert!((a.variance_sum.mean - trace).abs() < 1e-10);
    }

    #[test]
    fn antithetic_pairs_share_their_overlap() {
        let t = template(1, 0.7);
        let a = disorder_average(&t, DisorderLaw::Rademacher { h: 0.8 }, &exact(10, 3, true)).unwrap();
        for p in a.replicas.chunks(2) {
            assert!((p[0].overlap.mean - p[1].overlap.mean).abs() < 1e-12);
            assert_eq!(p[0].disorder_seed, p[1].disorder_seed);
        }
        assert_eq!(a.units, 5);
        assert!(disorder_average(&t, DisorderLaw::Zero, &exact(3, 3, true)).is_err());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let t = template(1, 0.5);
        let cfg = AverageConfig {
            replicas: 6,
            master_seed: 21,
            engine: InnerEngine::Mcmc,
            sampler: Some(SamplerConfig::new(3000, 300, 10, 0).unwrap()),
            antithetic: false,
        };
        let law = DisorderLaw::Gaussian { sigma: 1.0 };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| disorder_average(&t, law, &cfg).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn auto_engine_choice() {
        assert!(exact_applicable(&template(1, 1.0)));
        assert!(!exact_applicable(&template(2, 1.0)));
        assert!(exact_applicable(&template(2, 0.0)));
        let t = template(2, 1.0);
        let cfg = AverageConfig {
            replicas: 2,
            master_seed: 0,
            engine: InnerEngine::Auto,
            sampler: None,
            antithetic: false,
        };
        assert!(disorder_average(&t, DisorderLaw::Zero, &cfg).is_err());
    }
}
