//! Exact quenched observables for the Gaussian model with delta-pinning.
//!
//! The mixed reference measure expands over pinned sets `A`:
//!
//! ```text
//! Z = sum_A eps^|A| Z_gauss(Lambda \ A)
//! ```
//!
//! The sum is enumerated depth-first over sites in canonical order. Each
//! branch that keeps a site unpinned extends the inverse Cholesky factor of the
//! precision matrix by one row, so a leaf costs `O(|D|^2)` rather than a fresh
//! factorization. All weights are accumulated in log space against a running
//! maximum.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::FieldConfig;
use crate::error::{Error, Result};
use crate::lattice::Volume;
use crate::model::check_epsilon;

use super::partition::gaussian_log_partition;
use super::precision::precision_matrix;

/// Largest volume handled by exhaustive enumeration (`2^22` pinned sets).
pub const MAX_EXPANSION_SITES: usize = 22;

/// Number of leading sites whose pin decisions define independent work chunks.
/// Fixed, so the reduction order never depends on the thread count.
const PREFIX_DEPTH: usize = 8;

/// Exact observables of the mixed measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub log_z: f64,
    /// `mu(phi_i = 0)`.
    pub pin_probability: Vec<f64>,
    /// `mu(phi_i)`.
    pub mean: Vec<f64>,
    /// `mu(phi_i^2)`.
    pub second_moment: Vec<f64>,
    /// `sum_i eta_i mu(phi_i)`.
    pub overlap: f64,
    /// `|Lambda|^{-1} sum_i mu(phi_i = 0)`.
    pub pinned_fraction: f64,
}

impl ExactSolution {
    pub fn variance(&self) -> Vec<f64> {
        self.second_moment
            .iter()
            .zip(&self.mean)
            .map(|(s, m)| s - m * m)
            .collect()
    }

    pub fn variance_sum(&self) -> f64 {
        self.variance().iter().sum()
    }

    /// `sum_i mu(phi_i = 0)`.
    pub fn expected_pinned(&self) -> f64 {
        self.pin_probability.iter().sum()
    }
}

/// Exact solution at pinning strength `epsilon` and Gaussian curvature `c`.
pub fn exact_mixed_solution(
    vol: &Volume,
    eta: &FieldConfig,
    epsilon: f64,
    curvature: f64,
) -> Result<ExactSolution> {
    check_epsilon(epsilon)?;
    exact_mixed_solution_ln(vol, eta, epsilon.ln(), curvature)
}

/// Same as [`exact_mixed_solution`] with the pinning strength given as
/// `ln epsilon` (`-inf` for no pinning), for strengths beyond `f64` range.
pub fn exact_mixed_solution_ln(
    vol: &Volume,
    eta: &FieldConfig,
    ln_epsilon: f64,
    curvature: f64,
) -> Result<ExactSolution> {
    if ln_epsilon.is_nan() || ln_epsilon == f64::INFINITY {
        return Err(Error::InvalidParameter(format!("invalid ln(epsilon) {ln_epsilon}")));
    }
    let n = vol.len();
    if ln_epsilon == f64::NEG_INFINITY && n > MAX_EXPANSION_SITES {
        return unpinned_solution(vol, eta, curvature);
    }
    if n > MAX_EXPANSION_SITES {
        return Err(Error::VolumeTooLarge {
            sites: n,
            max: MAX_EXPANSION_SITES,
        });
    }
    if eta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: eta.len(),
        });
    }
    let a = precision_matrix(vol, &[], curvature)?;
    let problem = Problem {
        n,
        diag: a.diagonal_entry(),
        off: a.off_diagonal_entry(),
        neighbors: (0..n).map(|i| a.row_neighbors(i).to_vec()).collect(),
        eta: eta.values().to_vec(),
        ln_eps: ln_epsilon,
    };

    let depth = PREFIX_DEPTH.min(n);
    let chunks: Vec<Accumulator> = (0..1usize << depth)
        .into_par_iter()
        .map(|chunk| problem.run_chunk(chunk, depth))
        .collect::<Result<_>>()?;
    let acc = chunks
        .into_iter()
        .fold(Accumulator::new(n), |mut acc, c| {
            acc.merge(&c);
            acc
        });
    Ok(acc.finish(eta.values()))
}

/// Without pinning only the empty pinned set contributes.
fn unpinned_solution(vol: &Volume, eta: &FieldConfig, curvature: f64) -> Result<ExactSolution> {
    let s = gaussian_log_partition(vol, &[], eta, curvature)?;
    let diag = s.covariance.diagonal()?;
    let second_moment = diag.iter().zip(&s.mean).map(|(g, m)| g + m * m).collect();
    Ok(ExactSolution {
        log_z: s.log_z,
        pin_probability: vec![0.0; vol.len()],
        overlap: s.quadratic_form,
        mean: s.mean,
        second_moment,
        pinned_fraction: 0.0,
    })
}

struct Problem {
    n: usize,
    diag: f64,
    off: f64,
    neighbors: Vec<Vec<usize>>,
    eta: Vec<f64>,
    ln_eps: f64,
}

impl Problem {
    /// Chunk bits give the decisions for the first `depth` sites (bit set = pinned).
    fn run_chunk(&self, chunk: usize, depth: usize) -> Result<Accumulator> {
        let mut acc = Accumulator::new(self.n);
        let pinned_prefix = chunk.count_ones() as usize;
        if pinned_prefix > 0 && self.ln_eps == f64::NEG_INFINITY {
            return Ok(acc);
        }
        let mut factor = Factor::new(self.n);
        for k in 0..depth {
            if chunk >> (depth - 1 - k) & 1 == 0 {
                factor.push(self, k)?;
            }
        }
        let mut scratch = Scratch::new(self.n);
        self.visit(depth, &mut factor, &mut acc, &mut scratch)?;
        Ok(acc)
    }

    fn visit(
        &self,
        k: usize,
        factor: &mut Factor,
        acc: &mut Accumulator,
        scratch: &mut Scratch,
    ) -> Result<()> {
        if k == self.n {
            self.leaf(factor, acc, scratch);
            return Ok(());
        }
        factor.push(self, k)?;
        self.visit(k + 1, factor, acc, scratch)?;
        factor.pop();
        if self.ln_eps > f64::NEG_INFINITY {
            self.visit(k + 1, factor, acc, scratch)?;
        }
        Ok(())
    }

    fn leaf(&self, f: &Factor, acc: &mut Accumulator, s: &mut Scratch) {
        let n = self.n;
        let m = f.m;
        let pinned = n - m;
        let log_zd = 0.5 * m as f64 * (2.0 * PI).ln() - 0.5 * f.log_det[m] + 0.5 * f.quad[m];
        let ln_w = if pinned == 0 {
            log_zd
        } else {
            pinned as f64 * self.ln_eps + log_zd
        };
        // mean = L^{-T} y, diag(G) = column norms of L^{-1}
        for t in 0..m {
            let (mut mean, mut g) = (0.0, 0.0);
            for j in t..m {
                let w = f.linv[j * n + t];
                mean += w * f.y[j];
                g += w * w;
            }
            s.mean[t] = mean;
            s.gdiag[t] = g;
        }
        acc.add(ln_w, f, s);
    }
}

/// Inverse Cholesky factor of the precision matrix restricted to the unpinned
/// sites chosen so far, grown and shrunk one row at a time.
struct Factor {
    n: usize,
    m: usize,
    rows: Vec<usize>,
    pos: Vec<usize>,
    linv: Vec<f64>,
    y: Vec<f64>,
    log_det: Vec<f64>,
    quad: Vec<f64>,
    l: Vec<f64>,
}

impl Factor {
    fn new(n: usize) -> Self {
        Self {
            n,
            m: 0,
            rows: Vec::with_capacity(n),
            pos: vec![usize::MAX; n],
            linv: vec![0.0; n * n],
            y: vec![0.0; n],
            log_det: vec![0.0; n + 1],
            quad: vec![0.0; n + 1],
            l: vec![0.0; n],
        }
    }

    fn push(&mut self, p: &Problem, k: usize) -> Result<()> {
        let (n, m) = (self.n, self.m);
        // l = L^{-1} a, where a holds the couplings of site k to the current rows
        let l = &mut self.l[..m];
        l.iter_mut().for_each(|x| *x = 0.0);
        for &nb in &p.neighbors[k] {
            let t = self.pos[nb];
            if t == usize::MAX {
                continue;
            }
            for (j, lj) in l.iter_mut().enumerate().skip(t) {
                *lj += self.linv[j * n + t] * p.off;
            }
        }
        let schur = p.diag - l.iter().map(|x| x * x).sum::<f64>();
        if !(schur > 0.0) {
            return Err(Error::NotPositiveDefinite { row: k, pivot: schur });
        }
        let delta = schur.sqrt();
        for t in 0..m {
            let s: f64 = (t..m).map(|j| l[j] * self.linv[j * n + t]).sum();
            self.linv[m * n + t] = -s / delta;
        }
        self.linv[m * n + m] = 1.0 / delta;
        let ly: f64 = l.iter().zip(&self.y[..m]).map(|(a, b)| a * b).sum();
        self.y[m] = (p.eta[k] - ly) / delta;
        self.log_det[m + 1] = self.log_det[m] + 2.0 * delta.ln();
        self.quad[m + 1] = self.quad[m] + self.y[m] * self.y[m];
        self.pos[k] = m;
        self.rows.push(k);
        self.m += 1;
        Ok(())
    }

    fn pop(&mut self) {
        let k = self.rows.pop().expect("pop on empty factor");
        self.pos[k] = usize::MAX;
        self.m -= 1;
    }
}

struct Scratch {
    mean: Vec<f64>,
    gdiag: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            mean: vec![0.0; n],
            gdiag: vec![0.0; n],
        }
    }
}

/// Weighted sums scaled by `exp(-ln_scale)`.
#[derive(Debug, Clone)]
struct Accumulator {
    ln_scale: f64,
    total: f64,
    pin: Vec<f64>,
    mean: Vec<f64>,
    second: Vec<f64>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Self {
            ln_scale: f64::NEG_INFINITY,
            total: 0.0,
            pin: vec![0.0; n],
            mean: vec![0.0; n],
            second: vec![0.0; n],
        }
    }

    fn rescale_to(&mut self, ln_scale: f64) {
        if self.ln_scale == f64::NEG_INFINITY {
            self.ln_scale = ln_scale;
            return;
        }
        let r = (self.ln_scale - ln_scale).exp();
        self.total *= r;
        for v in [&mut self.pin, &mut self.mean, &mut self.second] {
            v.iter_mut().for_each(|x| *x *= r);
        }
        self.ln_scale = ln_scale;
    }

    fn add(&mut self, ln_w: f64, f: &Factor, s: &Scratch) {
        if ln_w > self.ln_scale {
            self.rescale_to(ln_w);
        }
        let w = (ln_w - self.ln_scale).exp();
        self.total += w;
        for (i, &p) in f.pos.iter().enumerate() {
            if p == usize::MAX {
                self.pin[i] += w;
            } else {
                let mu = s.mean[p];
                self.mean[i] += w * mu;
                self.second[i] += w * (s.gdiag[p] + mu * mu);
            }
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        if other.ln_scale == f64::NEG_INFINITY {
            return;
        }
        if other.ln_scale > self.ln_scale {
            self.rescale_to(other.ln_scale);
        }
        let r = (other.ln_scale - self.ln_scale).exp();
        self.total += r * other.total;
        for (a, b) in [
            (&mut self.pin, &other.pin),
            (&mut self.mean, &other.mean),
            (&mut self.second, &other.second),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += r * y);
        }
    }

    fn finish(self, eta: &[f64]) -> ExactSolution {
        let t = self.total;
        let pin_probability: Vec<f64> = self.pin.iter().map(|x| x / t).collect();
        let mean: Vec<f64> = self.mean.iter().map(|x| x / t).collect();
        let second_moment = self.second.iter().map(|x| x / t).collect();
        let overlap = eta.iter().zip(&mean).map(|(e, m)| e * m).sum();
        let pinned_fraction = pin_probability.iter().sum::<f64>() / eta.len() as f64;
        ExactSolution {
            log_z: self.ln_scale + t.ln(),
            pin_probability,
            mean,
            second_moment,
            overlap,
            pinned_fraction,
        }
    }
}
