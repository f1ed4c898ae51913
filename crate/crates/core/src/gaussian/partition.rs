use std::f64::consts::PI;

use crate::disorder::FieldConfig;
use crate::error::{Error, Result};
use crate::lattice::Volume;

use super::precision::{green_matrix, precision_matrix, GreenMatrix, DENSE_LIMIT};

/// Closed-form unpinned Gaussian measure on a sub-volume.
#[derive(Debug, Clone)]
pub struct GaussianSummary {
    /// `log Z = |D|/2 log 2pi - 1/2 log det A + 1/2 eta^T G eta`.
    pub log_z: f64,
    pub log_det_precision: f64,
    /// `eta^T G eta` on the unpinned sites.
    pub quadratic_form: f64,
    /// `G eta`, indexed like `covariance.precision().free_sites()`.
    pub mean: Vec<f64>,
    pub covariance: GreenMatrix,
}

impl GaussianSummary {
    pub fn free_sites(&self) -> &[usize] {
        self.covariance.precision().free_sites()
    }
}

/// Partition function, mean and covariance of the curvature-`c` Gaussian field
/// on `vol \ pinned` with fields `eta` (read on the unpinned sites only).
pub fn gaussian_log_partition(
    vol: &Volume,
    pinned: &[usize],
    eta: &FieldConfig,
    curvature: f64,
) -> Result<GaussianSummary> {
    if eta.len() != vol.len() {
        return Err(Error::DimensionMismatch {
            expected: vol.len(),
            found: eta.len(),
        });
    }
    let a = precision_matrix(vol, pinned, curvature)?;
    if a.dim() > DENSE_LIMIT {
        return Err(Error::VolumeTooLarge {
            sites: a.dim(),
            max: DENSE_LIMIT,
        });
    }
    let g = green_matrix(&a)?;
    let log_det = g.log_det_precision().expect("dense below the limit");
    let local_eta = eta.restricted(a.free_sites());
    let mean = g.apply(&local_eta)?;
    let quad: f64 = mean.iter().zip(&local_eta).map(|(m, e)| m * e).sum();
    let n = a.dim() as f64;
    Ok(GaussianSummary {
        log_z: 0.5 * n * (2.0 * PI).ln() - 0.5 * log_det + 0.5 * quad,
        log_det_precision: log_det,
        quadratic_form: quad,
        mean,
        covariance: g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_values() {
        let v = Volume::centered_box(2, 0).unwrap();
        let s = gaussian_log_partition(&v, &[], &FieldConfig::zeros(&v), 1.0).unwrap();
        assert!((s.log_z - (2.0 * PI.sqrt()).ln()).abs() < 1e-14);
        assert!((s.log_z - 1.265_512).abs() < 1e-6);

        let eta = FieldConfig::constant(&v, 0.5);
        let s = gaussian_log_partition(&v, &[], &eta, 1.0).unwrap();
        assert!((s.log_z - (2.0 * PI.sqrt()).ln() - 0.25).abs() < 1e-14);
        assert!((s.mean[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn domino_partition_function() {
        let v = Volume::from_sites(2, vec![vec![0, 0], vec![1, 0]]).unwrap();
        let s = gaussian_log_partition(&v, &[], &FieldConfig::zeros(&v), 1.0).unwrap();
        let z = 2.0 * PI / (15.0f64 / 64.0).sqrt();
        assert!((s.log_z.exp() - z).abs() < 1e-12);
        assert!((z - 12.978_45).abs() < 1e-4);
    }

    #[test]
    fn internal_consistency() {
        let v = Volume::centered_box(2, 2).unwrap();
        let eta = FieldConfig::new(&v, (0..25).map(|i| ((i * 7) % 5) as f64 - 2.0).collect()).unwrap();
        let s = gaussian_log_partition(&v, &[0, 12], &eta, 0.8).unwrap();
        let n = s.free_sites().len() as f64;
        let rebuilt = 0.5 * n * (2.0 * PI).ln() - 0.5 * s.log_det_precision + 0.5 * s.quadratic_form;
        assert!((rebuilt - s.log_z).abs() < 1e-12);
        assert_eq!(s.free_sites().len(), 23);
    }

    #[test]
    fn eigenvalues_at_most_one_bound_z_below() {
        // all eigenvalues of A lie in (0, 1], hence log det A <= 0
        for v in [
            Volume::centered_box(2, 3).unwrap(),
            Volume::centered_box(3, 1).unwrap(),
            Volume::rectangle(&[4, 4]).unwrap(),
        ] {
            let s = gaussian_log_partition(&v, &[], &FieldConfig::zeros(&v), 1.0).unwrap();
            assert!(s.log_det_precision <= 0.0);
            assert!(s.log_z >= 0.5 * v.len() as f64 * (2.0 * PI).ln());
        }
    }
}
