//! Sampler against an independent oracle for a non-Gaussian potential.
//!
//! Since `V_kappa(t) >= kappa t^2/2`, the curvature-`kappa` Gaussian mixed
//! measure dominates the target: drawing the pinned set and the heights
//! exactly from it and weighting by `exp(-(H_V - H_kappa)) <= 1` gives
//! i.i.d. importance samples with bounded weights.

use rand::Rng;
use rand_distr::StandardNormal;

use pinfield_core::gaussian::{gaussian_log_partition, precision_matrix};
use pinfield_core::linalg::Cholesky;
use pinfield_core::rng::stream;
use pinfield_core::sampler::{estimate_observables, SamplerConfig};
use pinfield_core::{hamiltonian, sample_disorder, DisorderLaw, FieldConfig, ModelParams, Potential, Volume};

struct Component {
    pinned_count: usize,
    free: Vec<usize>,
    mean: Vec<f64>,
    factor: Cholesky,
}

struct OracleEstimate {
    overlap: (f64, f64),
    pinned_fraction: (f64, f64),
}

fn oracle(vol: &Volume, eta: &FieldConfig, eps: f64, kappa: f64, samples: usize) -> OracleEstimate {
    let n = vol.len();
    let mut comps = Vec::new();
    let mut log_w = Vec::new();
    for mask in 0usize..1 << n {
        let pinned: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let s = gaussian_log_partition(vol, &pinned, eta, kappa).unwrap();
        let a = precision_matrix(vol, &pinned, kappa).unwrap();
        log_w.push(pinned.len() as f64 * eps.ln() + s.log_z);
        comps.push(Component {
            pinned_count: pinned.len(),
            free: s.free_sites().to_vec(),
            mean: s.mean.clone(),
            factor: Cholesky::factor(a.dim(), &a.to_dense()).unwrap(),
        });
    }
    let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut cumulative = Vec::with_capacity(log_w.len());
    let mut acc = 0.0;
    for lw in &log_w {
        acc += (lw - top).exp();
        cumulative.push(acc);
    }

    let target = Potential::anharmonic(kappa).unwrap();
    let reference = Potential::gaussian(kappa).unwrap();
    let zero = FieldConfig::zeros(vol);
    let mut rng = stream(2718, 0);
    let (mut ws, mut fo, mut fp) = (Vec::with_capacity(samples), Vec::new(), Vec::new());
    let mut phi = vec![0.0; n];
    for _ in 0..samples {
        let u = rng.random::<f64>() * acc;
        let c = &comps[cumulative.partition_point(|&x| x <= u).min(comps.len() - 1)];
        let z: Vec<f64> = (0..c.free.len()).map(|_| rng.sample(StandardNormal)).collect();
        let dev = c.factor.backward(&z);
        phi.iter_mut().for_each(|x| *x = 0.0);
        for (k, &i) in c.free.iter().enumerate() {
            phi[i] = c.mean[k] + dev[k];
        }
        let excess = hamiltonian(vol, &target, &zero, &phi).unwrap()
            - hamiltonian(vol, &reference, &zero, &phi).unwrap();
        assert!(excess >= -1e-12);
        ws.push((-excess).exp());
        fo.push(eta.values().iter().zip(&phi).map(|(e, x)| e * x).sum::<f64>());
        fp.push(c.pinned_count as f64 / n as f64);
    }
    let ratio = |f: &[f64]| {
        let sw: f64 = ws.iter().sum();
        let r = f.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / sw;
        let var: f64 = f.iter().zip(&ws).map(|(x, w)| ((x - r) * w).powi(2)).sum();
        (r, var.sqrt() / sw)
    };
    OracleEstimate {
        overlap: ratio(&fo),
        pinned_fraction: ratio(&fp),
    }
}

#[test]
fn anharmonic_sampler_matches_importance_oracle() {
    let v = Volume::centered_box(2, 1).unwrap();
    let eta = sample_disorder(DisorderLaw::Gaussian { sigma: 1.0 }, &v, 7).unwrap();
    let (eps, kappa) = (0.5, 0.5);
    let o = oracle(&v, &eta, eps, kappa, 2_000_000);
    let p = ModelParams::new(v, Potential::anharmonic(kappa).unwrap(), eps, eta).unwrap();
    let r = estimate_observables(&p, &SamplerConfig::new(100_000, 1000, 100, 13).unwrap()).unwrap();
    for (name, est, (m, se)) in [
        ("overlap", r.overlap, o.overlap),
        ("pinned fraction", r.pinned_fraction, o.pinned_fraction),
    ] {
        let combined = (est.stderr.powi(2) + se * se).sqrt();
        let z = (est.mean - m).abs() / combined;
        assert!(z < 3.0, "{name}: sampler {est:?}, oracle {m} +- {se}");
    }
}
