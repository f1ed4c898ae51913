use crate::error::{Error, Result};
use crate::lattice::Volume;
use crate::linalg::{conjugate_gradient, Cholesky, SpdOperator};

/// Largest unpinned sub-volume inverted densely; beyond it Green entries come
/// from conjugate-gradient solves.
pub const DENSE_LIMIT: usize = 4096;

/// Relative residual for every iterative Green solve.
pub const CG_TOLERANCE: f64 = 1e-12;

/// Hessian of the Gaussian energy `V(t) = c t^2 / 2` on the unpinned sites,
/// with pinned and exterior sites held at zero.
///
/// Diagonal entries are `c/2`, nearest-neighbor entries `-c/(4d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionMatrix {
    free: Vec<usize>,
    curvature: f64,
    diag: f64,
    off: f64,
    neighbors: Vec<Vec<usize>>,
}

/// Builds the precision matrix on `vol` minus `pinned` (volume indices).
pub fn precision_matrix(vol: &Volume, pinned: &[usize], curvature: f64) -> Result<PrecisionMatrix> {
    if !(curvature > 0.0 && curvature.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "curvature must be positive, got {curvature}"
        )));
    }
    let n = vol.len();
    let mut local = vec![Some(0usize); n];
    for &p in pinned {
        if p >= n {
            return Err(Error::NotSubset { index: p, sites: n });
        }
        local[p] = None;
    }
    let mut free = Vec::with_capacity(n);
    for (i, slot) in local.iter_mut().enumerate() {
        if slot.is_some() {
            *slot = Some(free.len());
            free.push(i);
        }
    }
    let neighbors = free
        .iter()
        .map(|&i| vol.neighbors(i).iter().filter_map(|&j| local[j]).collect())
        .collect();
    Ok(PrecisionMatrix {
        free,
        curvature,
        diag: 0.5 * curvature,
        off: -curvature / (4.0 * vol.dimension() as f64),
        neighbors,
    })
}

impl PrecisionMatrix {
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Volume indices of the rows, ascending.
    pub fn free_sites(&self) -> &[usize] {
        &self.free
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn diagonal_entry(&self) -> f64 {
        self.diag
    }

    pub fn off_diagonal_entry(&self) -> f64 {
        self.off
    }

    /// Local neighbor indices of row `i`.
    pub fn row_neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag
        } else if self.neighbors[i].contains(&j) {
            self.off
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = self.diag;
            for &j in &self.neighbors[i] {
                a[i * n + j] = self.off;
            }
        }
        a
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.neighbors
            .iter()
            .map(|nb| self.diag + self.off * nb.len() as f64)
            .collect()
    }

    /// Gershgorin enclosure of the spectrum, `[min(center - radius), max(center + radius)]`.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let max_deg = self.neighbors.iter().map(Vec::len).max().unwrap_or(0) as f64;
        let radius = max_deg * self.off.abs();
        (self.diag - radius, self.diag + radius)
    }

    fn check_spectrum(&self) -> Result<()> {
        let (lo, hi) = self.gershgorin_bounds();
        if lo < 0.0 || hi > self.curvature * (1.0 + 1e-15) {
            return Err(Error::NotPositiveDefinite { row: 0, pivot: lo });
        }
        Ok(())
    }
}

impl SpdOperator for PrecisionMatrix {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, nb) in self.neighbors.iter().enumerate() {
            out[i] = self.diag * x[i] + self.off * nb.iter().map(|&j| x[j]).sum::<f64>();
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        vec![self.diag; self.free.len()]
    }
}

/// `G = A^{-1}`: dense for small sub-volumes, solved column by column otherwise.
#[derive(Debug, Clone)]
pub struct GreenMatrix {
    precision: PrecisionMatrix,
    dense: Option<(Cholesky, Vec<f64>)>,
}

pub fn green_matrix(a: &PrecisionMatrix) -> Result<GreenMatrix> {
    a.check_spectrum()?;
    let dense = if a.dim() <= DENSE_LIMIT {
        let ch = Cholesky::factor(a.dim(), &a.to_dense())?;
        let inv = ch.inverse();
        Some((ch, inv))
    } else {
        None
    };
    Ok(GreenMatrix {
        precision: a.clone(),
        dense,
    })
}

impl GreenMatrix {
    pub fn dim(&self) -> usize {
        self.precision.dim()
    }

    pub fn precision(&self) -> &PrecisionMatrix {
        &self.precision
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    /// Row-major dense inverse, when available.
    pub fn dense(&self) -> Option<&[f64]> {
        self.dense.as_ref().map(|(_, g)| g.as_slice())
    }

    /// `log det A`, when the dense factor is available.
    pub fn log_det_precision(&self) -> Option<f64> {
        self.dense.as_ref().map(|(ch, _)| ch.log_det())
    }

    /// `G v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
        match &self.dense {
            Some((_, g)) => Ok((0..n)
                .map(|i| g[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
                .collect()),
            None => Ok(conjugate_gradient(&self.precision, v, CG_TOLERANCE)?.solution),
        }
    }

    pub fn column(&self, j: usize) -> Result<Vec<f64>> {
        let n = self.dim();
        match &self.dense {
            Some((_, g)) => Ok((0..n).map(|i| g[i * n + j]).collect()),
            None => {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                self.apply(&e)
            }
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Result<f64> {
        match &self.dense {
            Some((_, g)) => Ok(g[i * self.dim() + j]),
            None => Ok(self.column(j)?[i]),
        }
    }

    /// `G_ii` for every row. Costs one solve per row in iterative mode.
    pub fn diagonal(&self) -> Result<Vec<f64>> {
        (0..self.dim()).map(|i| self.entry(i, i)).collect()
    }

    /// `sum_ij G_ij`.
    pub fn sum_all(&self) -> Result<f64> {
        Ok(self.apply(&vec![1.0; self.dim()])?.iter().sum())
    }

    /// `v^T G v`.
    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        Ok(self.apply(v)?.iter().zip(v).map(|(a, b)| a * b).sum())
    }
}
