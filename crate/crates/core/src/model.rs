//! The pinned random-field interface: parameters and energy.
//!
//! The Gibbs weight of a configuration `phi` on a volume is `exp(-H(phi))`
//! against the product reference measure `prod_i (d phi_i + eps delta_0)`,
//! with heights fixed to zero outside the volume and
//!
//! ```text
//! H = 1/(4d) sum_<ij> V(phi_i - phi_j) + 1/(4d) sum_{boundary (i,j)} V(phi_i) - sum_i eta_i phi_i
//! ```

use crate::disorder::FieldConfig;
use crate::error::{Error, Result};
use crate::lattice::Volume;
use crate::potential::Potential;

/// Everything that defines one quenched finite-volume measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub volume: Volume,
    pub potential: Potential,
    pub epsilon: f64,
    pub eta: FieldConfig,
}

impl ModelParams {
    pub fn new(volume: Volume, potential: Potential, epsilon: f64, eta: FieldConfig) -> Result<Self> {
        check_epsilon(epsilon)?;
        if eta.len() != volume.len() {
            return Err(Error::DimensionMismatch {
                expected: volume.len(),
                found: eta.len(),
            });
        }
        Ok(Self {
            volume,
            potential: potential.validated()?,
            epsilon,
            eta,
        })
    }

    pub fn with_eta(&self, eta: FieldConfig) -> Result<Self> {
        Self::new(self.volume.clone(), self.potential, self.epsilon, eta)
    }

    /// Edge weight `1/(4d)`.
    pub fn edge_weight(&self) -> f64 {
        edge_weight(&self.volume)
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon >= 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "pinning strength must be finite and nonnegative, got {epsilon}"
        )))
    }
}

pub fn edge_weight(vol: &Volume) -> f64 {
    1.0 / (4.0 * vol.dimension() as f64)
}

/// Energy of `phi` under zero boundary condition.
pub fn hamiltonian(vol: &Volume, pot: &Potential, eta: &FieldConfig, phi: &[f64]) -> Result<f64> {
    for n in [eta.len(), phi.len()] {
        if n != vol.len() {
            return Err(Error::DimensionMismatch {
                expected: vol.len(),
                found: n,
            });
        }
    }
    let w = edge_weight(vol);
    let internal: f64 = vol
        .internal_edges()
        .iter()
        .map(|&(i, j)| pot.value(phi[i] - phi[j]))
        .sum();
    let boundary: f64 = vol
        .boundary_edges()
        .iter()
        .map(|(i, _)| pot.value(phi[*i]))
        .sum();
    let field: f64 = eta.values().iter().zip(phi).map(|(e, p)| e * p).sum();
    Ok(w * (internal + boundary) - field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn domino() -> Volume {
        Volume::from_sites(2, vec![vec![0, 0], vec![1, 0]]).unwrap()
    }

    #[test]
    fn hand_expanded_energies() {
        let g = Potential::gaussian(1.0).unwrap();
        let single = Volume::centered_box(2, 0).unwrap();
        let zero = FieldConfig::zeros(&single);
        let x = 1.7;
        let h = hamiltonian(&single, &g, &zero, &[x]).unwrap();
        assert!((h - x * x / 4.0).abs() < 1e-15);

        let dom = domino();
        let (x, y) = (0.4, -1.3);
        let h = hamiltonian(&dom, &g, &FieldConfig::zeros(&dom), &[x, y]).unwrap();
        let expected = (x - y) * (x - y) / 16.0 + 3.0 * (x * x + y * y) / 16.0;
        assert!((h - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_configuration_has_zero_energy() {
        let v = Volume::centered_box(3, 1).unwrap();
        let eta = FieldConfig::constant(&v, 2.0);
        let pot = Potential::anharmonic(0.4).unwrap();
        assert_eq!(hamiltonian(&v, &pot, &eta, &vec![0.0; v.len()]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let v = domino();
        let g = Potential::gaussian(1.0).unwrap();
        assert!(hamiltonian(&v, &g, &FieldConfig::zeros(&v), &[1.0]).is_err());
        assert!(ModelParams::new(v.clone(), g, -1.0, FieldConfig::zeros(&v)).is_err());
    }

    proptest! {
        #[test]
        fn sign_flip_symmetry(
            values in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 9),
            kappa in 0.05f64..1.0,
        ) {
            let v = Volume::centered_box(2, 1).unwrap();
            let pot = Potential::anharmonic(kappa).unwrap();
            let eta = FieldConfig::new(&v, values.iter().map(|p| p.0).collect()).unwrap();
            let phi: Vec<f64> = values.iter().map(|p| p.1).collect();
            let neg_phi: Vec<f64> = phi.iter().map(|x| -x).collect();
            let a = hamiltonian(&v, &pot, &eta, &phi).unwrap();
            let b = hamiltonian(&v, &pot, &eta.negated(), &neg_phi).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
