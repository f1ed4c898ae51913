//! Sample statistics, batch means and least-squares fits.

use serde::{Deserialize, Serialize};

use crate::linalg::Cholesky;

/// Mean with a standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Self { mean, stderr: 0.0 }
    }

    /// Mean and standard error of the mean of independent samples.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Self { mean, stderr: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self {
            mean,
            stderr: (var / n).sqrt(),
        }
    }

    /// Number of standard errors separating `self` from `value`.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.mean - value).abs() / self.stderr
    }
}

/// Streams observations of a fixed-length vector into contiguous batches.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    width: usize,
    batch_len: usize,
    batches: usize,
    sums: Vec<f64>,
    filled: usize,
    current: usize,
}

impl BatchMeans {
    /// `total` observations split into `batches` batches; a remainder is dropped.
    pub fn new(width: usize, total: usize, batches: usize) -> Self {
        assert!(batches > 0 && total >= batches);
        Self {
            width,
            batch_len: total / batches,
            batches,
            sums: vec![0.0; width * batches],
            filled: 0,
            current: 0,
        }
    }

    pub fn push(&mut self, obs: &[f64]) {
        debug_assert_eq!(obs.len(), self.width);
        if self.current >= self.batches {
            return;
        }
        let row = &mut self.sums[self.current * self.width..(self.current + 1) * self.width];
        row.iter_mut().zip(obs).for_each(|(s, x)| *s += x);
        self.filled += 1;
        if self.filled == self.batch_len {
            self.filled = 0;
            self.current += 1;
        }
    }

    pub fn batches(&self) -> usize {
        self.batches
    }

    pub fn batch_len(&self) -> usize {
        self.batch_len
    }

    fn batch_values(&self, k: usize, range: std::ops::Range<usize>) -> Vec<f64> {
        range
            .map(|b| self.sums[b * self.width + k] / self.batch_len as f64)
            .collect()
    }

    /// Batch-means estimate of observable `k`.
    pub fn estimate(&self, k: usize) -> Estimate {
        Estimate::from_samples(&self.batch_values(k, 0..self.batches))
    }

    pub fn estimates(&self) -> Vec<Estimate> {
        (0..self.width).map(|k| self.estimate(k)).collect()
    }

    /// Separation, in combined standard errors, between the two chain halves.
    pub fn half_split_z(&self, k: usize) -> f64 {
        let h = self.batches / 2;
        let a = Estimate::from_samples(&self.batch_values(k, 0..h));
        let b = Estimate::from_samples(&self.batch_values(k, h..2 * h));
        let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        if se == 0.0 {
            if a.mean == b.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (a.mean - b.mean).abs() / se
        }
    }
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
    }
}

/// Least-squares polynomial coefficients, constant term first.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Vec<f64> {
    let m = degree + 1;
    let mut normal = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for (&xi, &yi) in x.iter().zip(y) {
        let powers: Vec<f64> = (0..m).map(|p| xi.powi(p as i32)).collect();
        for a in 0..m {
            rhs[a] += powers[a] * yi;
            for b in 0..m {
                normal[a * m + b] += powers[a] * powers[b];
            }
        }
    }
    Cholesky::factor(m, &normal)
        .expect("polyfit needs more distinct points than the degree")
        .solve(&rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_of_constant() {
        let e = Estimate::from_samples(&[2.0; 10]);
        assert_eq!((e.mean, e.stderr), (2.0, 0.0));
    }

    #[test]
    fn batch_means_layout() {
        let mut b = BatchMeans::new(2, 10, 4);
        for t in 0..10 {
            b.push(&[t as f64, 1.0]);
        }
        // batch length 2, last two observations dropped
        assert_eq!(b.batch_len(), 2);
        let e = b.estimate(0);
        assert!((e.mean - 3.5).abs() < 1e-15);
        assert_eq!(b.estimate(1).stderr, 0.0);
        assert_eq!(b.half_split_z(1), 0.0);
    }

    #[test]
    fn fits_recover_exact_data() {
        let x = [1.0, 2.0, 3.0, 5.0];
        let y: Vec<f64> = x.iter().map(|t| 0.5 - 2.0 * t).collect();
        let f = linear_fit(&x, &y);
        assert!((f.slope + 2.0).abs() < 1e-14 && (f.intercept - 0.5).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14);
        let y: Vec<f64> = x.iter().map(|t| 1.0 + 0.25 * t - 0.1 * t * t).collect();
        let c = polyfit(&x, &y, 2);
        assert!((c[0] - 1.0).abs() < 1e-10 && (c[1] - 0.25).abs() < 1e-10 && (c[2] + 0.1).abs() < 1e-10);
    }
}
