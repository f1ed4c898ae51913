//! Small dense Cholesky factorization and matrix-free conjugate gradient.

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix,
/// stored row-major (full square storage, upper part zero).
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors a row-major `n x n` symmetric matrix (only the lower triangle is read).
    pub fn factor(n: usize, a: &[f64]) -> Result<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                s -= ri.iter().zip(rj).map(|(x, y)| x * y).sum::<f64>();
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum::<f64>()
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / self.l[i * n + i];
        }
        y
    }

    /// Solves `L^T x = y`.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            x[i] /= self.l[i * n + i];
            let xi = x[i];
            for k in 0..i {
                x[k] -= self.l[i * n + k] * xi;
            }
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    /// Full inverse, row-major.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        // W = L^{-1}, lower triangular, built column by column
        let mut w = vec![0.0; n * n];
        for j in 0..n {
            w[j * n + j] = 1.0 / self.l[j * n + j];
            for i in j + 1..n {
                let mut s = 0.0;
                for k in j..i {
                    s += self.l[i * n + k] * w[k * n + j];
                }
                w[i * n + j] = -s / self.l[i * n + i];
            }
        }
        // A^{-1} = W^T W
        let mut inv = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (i..n).map(|k| w[k * n + i] * w[k * n + j]).sum();
                inv[i * n + j] = s;
                inv[j * n + i] = s;
            }
        }
        inv
    }
}

/// Symmetric positive definite operator given by its action.
pub trait SpdOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// Diagonal for Jacobi preconditioning.
    fn diagonal(&self) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Normwise backward error of the returned solution.
    pub relative_residual: f64,
}

/// Power-iteration estimate of `||A||_2`.
fn operator_norm<A: SpdOperator>(a: &A) -> f64 {
    let n = a.dim();
    let mut x: Vec<f64> = (0..n)
        .map(|i| 0.5 + ((i as u64).wrapping_mul(2_654_435_761) % 1000) as f64 / 1000.0)
        .collect();
    let mut y = vec![0.0; n];
    let mut est = 0.0;
    for _ in 0..30 {
        let nx = norm(&x);
        a.apply(&x, &mut y);
        est = norm(&y) / nx;
        let ny = norm(&y);
        if ny == 0.0 {
            break;
        }
        x.iter_mut().zip(&y).for_each(|(x, y)| *x = y / ny);
    }
    est
}

/// Jacobi-preconditioned conjugate gradient to a normwise backward error
/// `||b - A x|| / (||A|| ||x|| + ||b||) <= tol`.
///
/// A plain `||b - A x|| <= tol ||b||` target sits below the rounding floor
/// once `||x|| / ||b||` grows like the condition number, as it does for
/// `sum_ij G_ij` on large boxes.
pub fn conjugate_gradient<A: SpdOperator>(a: &A, b: &[f64], tol: f64) -> Result<CgOutcome> {
    let n = a.dim();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let anorm = operator_norm(a);
    let backward = |r: f64, x: &[f64]| r / (anorm * norm(x) + bnorm);
    let max_iter = 20 * n + 1000;
    for it in 1..=max_iter {
        a.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if backward(norm(&r), &x) <= tol {
            // confirm against the true residual, not the recurrence
            a.apply(&x, &mut ap);
            let true_res = b.iter().zip(&ap).map(|(b, y)| (b - y).powi(2)).sum::<f64>().sqrt();
            let true_rel = backward(true_res, &x);
            if true_rel <= tol {
                return Ok(CgOutcome {
                    solution: x,
                    iterations: it,
                    relative_residual: true_rel,
                });
            }
            r = b.iter().zip(&ap).map(|(b, y)| b - y).collect();
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverNotConverged {
        iterations: max_iter,
        residual: backward(norm(&r), &x),
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> Vec<f64> {
        // tridiagonal + rank one, diagonally dominant
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 4.0 + i as f64 * 0.1;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] += 0.01 * ((i + 1) * (j + 1)) as f64 / n as f64;
            }
        }
        a
    }

    #[test]
    fn inverse_and_solve() {
        let n = 7;
        let a = spd(n);
        let ch = Cholesky::factor(n, &a).unwrap();
        let inv = ch.inverse();
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| inv[i * n + k] * a[k * n + j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = ch.solve(&b);
        for i in 0..n {
            let s: f64 = (0..n).map(|k| a[i * n + k] * x[k]).sum();
            assert!((s - b[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn log_det_matches_two_by_two() {
        let a = [0.5, -0.125, -0.125, 0.5];
        let ch = Cholesky::factor(2, &a).unwrap();
        assert!((ch.log_det() - (15.0f64 / 64.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_indefinite() {
        let a = [1.0, 2.0, 2.0, 1.0];
        assert!(matches!(
            Cholesky::factor(2, &a),
            Err(Error::NotPositiveDefinite { row: 1, .. })
        ));
    }

    struct Dense(usize, Vec<f64>);
    impl SpdOperator for Dense {
        fn dim(&self) -> usize {
            self.0
        }
        fn apply(&self, x: &[f64], out: &mut [f64]) {
            for i in 0..self.0 {
                out[i] = (0..self.0).map(|k| self.1[i * self.0 + k] * x[k]).sum();
            }
        }
        fn diagonal(&self) -> Vec<f64> {
            (0..self.0).map(|i| self.1[i * self.0 + i]).collect()
        }
    }

    #[test]
    fn cg_matches_cholesky() {
        let n = 30;
        let a = spd(n);
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.3).cos()).collect();
        let direct = Cholesky::factor(n, &a).unwrap().solve(&b);
        let cg = conjugate_gradient(&Dense(n, a), &b, 1e-12).unwrap();
        assert!(cg.relative_residual <= 1e-12);
        for (x, y) in cg.solution.iter().zip(&direct) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
