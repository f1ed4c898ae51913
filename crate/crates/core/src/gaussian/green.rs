//! Green's function scans on centered boxes and the infinite-volume constant.
//!
//! On the box of side `n = 2L + 1` the Dirichlet precision matrix is
//! diagonalized by products of sine modes,
//! `psi_k(x) = sqrt(2/(n+1)) sin(pi k (x + L + 1)/(n+1))`, with eigenvalues
//! `c/(2d) sum_a (1 - cos(pi k_a/(n+1)))`. Traces and log-determinants follow
//! in `O(n^d)` without forming any matrix.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Volume;
use crate::linalg::conjugate_gradient;
use crate::quad;
use crate::stats::{linear_fit, polyfit, LinearFit};

use super::precision::{precision_matrix, CG_TOLERANCE};

/// Spectral quantities of the curvature-1 precision matrix on a centered box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSpectrum {
    pub sites: usize,
    /// `tr G`.
    pub trace_green: f64,
    /// `log det A`.
    pub log_det: f64,
    /// `G(0, 0)`.
    pub green_origin: f64,
    /// `sum_ij G_ij`.
    pub green_sum: f64,
}

pub fn box_spectrum(d: usize, half_width: u32) -> Result<BoxSpectrum> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let n = 2 * half_width as usize + 1;
    let sites = n
        .checked_pow(d as u32)
        .ok_or(Error::VolumeOverflow { d, side: n as u64 })?;
    let norm = 2.0 / (n as f64 + 1.0);
    // per-mode 1d data: 1 - cos, psi_k(0)^2, (sum_x psi_k(x))^2
    let modes: Vec<(f64, f64, f64)> = (1..=n)
        .map(|k| {
            let th = PI * k as f64 / (n as f64 + 1.0);
            let one_minus_cos = 2.0 * (0.5 * th).sin().powi(2);
            let at_origin = norm * (th * (half_width as f64 + 1.0)).sin().powi(2);
            let sum: f64 = (1..=n).map(|x| (th * x as f64).sin()).sum::<f64>() * norm.sqrt();
            (one_minus_cos, at_origin, sum * sum)
        })
        .collect();
    let scale = 1.0 / (2.0 * d as f64);
    let mut idx = vec![0usize; d];
    let (mut trace, mut log_det, mut origin, mut total) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..sites {
        let (mut lam, mut w0, mut ws) = (0.0, 1.0, 1.0);
        for &k in &idx {
            let (c, o, s) = modes[k];
            lam += c;
            w0 *= o;
            ws *= s;
        }
        lam *= scale;
        trace += 1.0 / lam;
        log_det += lam.ln();
        origin += w0 / lam;
        total += ws / lam;
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < n {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(BoxSpectrum {
        sites,
        trace_green: trace,
        log_det,
        green_origin: origin,
        green_sum: total,
    })
}

/// One row of a Green's function scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenRow {
    #[serde(rename = "L")]
    pub half_width: u32,
    /// `G(0, 0)`, from an iterative solve.
    pub g00: f64,
    /// `|Lambda|^{-1} sum_i G_ii`, from the box spectrum.
    pub avg_diag: f64,
    /// `sum_ij G_ij`, from an iterative solve against the all-ones vector.
    pub sum_all: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenScan {
    pub d: usize,
    pub rows: Vec<GreenRow>,
    /// `G(0,0)` against `ln L`.
    pub diagonal_fit: LinearFit,
    /// `ln sum_ij G_ij` against `ln(L + 1)`, the distance from the origin to
    /// the first exterior site.
    pub sum_exponent_fit: LinearFit,
    /// `G(0,0) ~ a + b/(L+1) + c/(L+1)^2` extrapolated to `L = inf` (d >= 3, at least 3 rows).
    pub extrapolated_origin: Option<f64>,
}

/// Exact Green's function data on the boxes `Lambda_L`, `L` in `half_widths`.
pub fn green_diagonal_scan(d: usize, half_widths: &[u32]) -> Result<GreenScan> {
    if half_widths.len() < 2 || half_widths.windows(2).any(|w| w[0] >= w[1]) || half_widths[0] == 0
    {
        return Err(Error::InvalidParameter(
            "scan needs at least two strictly increasing positive L".into(),
        ));
    }
    let rows: Vec<GreenRow> = half_widths
        .par_iter()
        .map(|&l| green_row(d, l))
        .collect::<Result<_>>()?;
    let ln_l: Vec<f64> = rows.iter().map(|r| (r.half_width as f64).ln()).collect();
    let ln_dist: Vec<f64> = rows.iter().map(|r| (r.half_width as f64 + 1.0).ln()).collect();
    let g00: Vec<f64> = rows.iter().map(|r| r.g00).collect();
    let ln_sum: Vec<f64> = rows.iter().map(|r| r.sum_all.ln()).collect();
    let extrapolated_origin = (d >= 3 && rows.len() >= 3).then(|| {
        let inv: Vec<f64> = rows.iter().map(|r| 1.0 / (r.half_width as f64 + 1.0)).collect();
        polyfit(&inv, &g00, 2)[0]
    });
    Ok(GreenScan {
        d,
        diagonal_fit: linear_fit(&ln_l, &g00),
        sum_exponent_fit: linear_fit(&ln_dist, &ln_sum),
        extrapolated_origin,
        rows,
    })
}

fn green_row(d: usize, half_width: u32) -> Result<GreenRow> {
    let vol = Volume::centered_box(d, half_width)?;
    let a = precision_matrix(&vol, &[], 1.0)?;
    let origin = vol.origin().expect("centered box contains the origin");
    let mut e = vec![0.0; vol.len()];
    e[origin] = 1.0;
    let g00 = conjugate_gradient(&a, &e, CG_TOLERANCE)?.solution[origin];
    let sum_all = conjugate_gradient(&a, &vec![1.0; vol.len()], CG_TOLERANCE)?
        .solution
        .iter()
        .sum();
    let spec = box_spectrum(d, half_width)?;
    Ok(GreenRow {
        half_width,
        g00,
        avg_diag: spec.trace_green / spec.sites as f64,
        sum_all,
    })
}

/// `G(0,0)` on the whole lattice `Z^d`, `d >= 3`, by quadrature over the
/// Brillouin zone of `1 / A(k)` with `A(k) = (1/2d) sum_a (1 - cos k_a)`.
///
/// The last momentum is integrated in closed form,
/// `(1/2pi) int dk / (b - cos k) = 1 / sqrt(b^2 - 1)`, and the remaining
/// `d - 1` are folded onto `[0, pi]` and integrated adaptively.
pub fn infinite_volume_green_origin(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!(
            "the lattice Green's function diverges in d={d}"
        )));
    }
    let tol = if d == 3 { 1e-11 } else { 1e-8 };
    let integral = nested(d - 1, 0.0, tol)?;
    Ok(2.0 * d as f64 * integral / PI.powi(d as i32 - 1))
}

/// `int_{[0,pi]^depth} 1/sqrt(b^2 - 1)` with `b - 1 = partial + sum (1 - cos k)`.
fn nested(depth: usize, partial: f64, tol: f64) -> Result<f64> {
    let mut failure = None;
    let q = quad::integrate(
        |k| {
            let s = partial + 2.0 * (0.5 * k).sin().powi(2);
            if depth == 1 {
                1.0 / (s * (s + 2.0)).sqrt()
            } else {
                nested(depth - 1, s, tol * 0.1).unwrap_or_else(|e| {
                    failure = Some(e);
                    f64::NAN
                })
            }
        },
        0.0,
        PI,
        tol,
        0.0,
        4000,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    q.map(|q| q.value).map_err(|_| Error::Quadrature {
        field: partial,
        neighbors: vec![],
    })
}
