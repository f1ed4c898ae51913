//! Dense linear algebra checked against nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use pinfield_core::gaussian::{box_spectrum, green_matrix, precision_matrix};
use pinfield_core::Volume;
use proptest::prelude::*;

fn dense(vol: &Volume, pinned: &[usize], c: f64) -> DMatrix<f64> {
    let a = precision_matrix(vol, pinned, c).unwrap();
    DMatrix::from_row_slice(a.dim(), a.dim(), &a.to_dense())
}

#[test]
fn precision_spectrum_lies_in_unit_interval() {
    for (d, l) in [(1, 4), (2, 1), (2, 3), (3, 1), (3, 2)] {
        let vol = Volume::centered_box(d, l).unwrap();
        let eig = SymmetricEigen::new(dense(&vol, &[], 1.0)).eigenvalues;
        assert!(eig.iter().all(|&x| x > 0.0 && x <= 1.0 + 1e-14), "d={d} L={l}");
    }
}

#[test]
fn box_spectrum_matches_eigendecomposition() {
    for (d, l) in [(2, 1), (2, 4), (3, 1), (3, 2)] {
        let vol = Volume::centered_box(d, l).unwrap();
        let m = dense(&vol, &[], 1.0);
        let eig = SymmetricEigen::new(m.clone()).eigenvalues;
        let s = box_spectrum(d, l).unwrap();
        let trace: f64 = eig.iter().map(|x| 1.0 / x).sum();
        let log_det: f64 = eig.iter().map(|x| x.ln()).sum();
        let inv = m.try_inverse().unwrap();
        let o = vol.origin().unwrap();
        assert!((s.trace_green - trace).abs() < 1e-10 * trace);
        assert!((s.log_det - log_det).abs() < 1e-10 * log_det.abs().max(1.0));
        assert!((s.green_origin - inv[(o, o)]).abs() < 1e-11);
        assert!((s.green_sum - inv.sum()).abs() < 1e-10 * inv.sum());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn green_matrix_is_the_inverse(
        sides in proptest::collection::vec(1usize..5, 2..=3),
        c in 0.2f64..3.0,
        mask in any::<u64>(),
    ) {
        let vol = Volume::rectangle(&sides).unwrap();
        let pinned: Vec<usize> = (0..vol.len()).filter(|i| mask >> (i % 64) & 1 == 1 && i % 3 == 0).collect();
        let m = dense(&vol, &pinned, c);
        let g = green_matrix(&precision_matrix(&vol, &pinned, c).unwrap()).unwrap();
        let n = g.dim();
        if n == 0 {
            return Ok(());
        }
        let inv = m.clone().try_inverse().unwrap();
        let ours = g.dense().unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((ours[i * n + j] - inv[(i, j)]).abs() < 1e-12 * inv.amax().max(1.0));
            }
        }
        let log_det = m.cholesky().unwrap().l().diagonal().iter().map(|x| 2.0 * x.ln()).sum::<f64>();
        prop_assert!((g.log_det_precision().unwrap() - log_det).abs() < 1e-11 * log_det.abs().max(1.0));
    }
}
