//! Quenched random fields: laws, realizations and their wire format.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Site, Volume, VolumeJson};
use crate::rng;

/// Single-site law of the i.i.d. fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisorderLaw {
    Zero,
    Constant { h: f64 },
    Gaussian { sigma: f64 },
    Rademacher { h: f64 },
}

impl DisorderLaw {
    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => Err(
                Error::InvalidParameter(format!("sigma must be nonnegative, got {sigma}")),
            ),
            Self::Constant { h } | Self::Rademacher { h } if !h.is_finite() => {
                Err(Error::InvalidParameter(format!("h must be finite, got {h}")))
            }
            law => Ok(law),
        }
    }

    /// `E(eta_0^2)`.
    pub fn second_moment(&self) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Constant { h } | Self::Rademacher { h } => h * h,
            Self::Gaussian { sigma } => sigma * sigma,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self, Self::Constant { h } if *h != 0.0)
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Constant { h } => h,
            Self::Gaussian { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
            Self::Rademacher { h } => {
                if rng.random::<bool>() {
                    h
                } else {
                    -h
                }
            }
        }
    }
}

impl fmt::Display for DisorderLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Constant { h } => write!(f, "const:{h}"),
            Self::Gaussian { sigma } => write!(f, "gauss:{sigma}"),
            Self::Rademacher { h } => write!(f, "rademacher:{h}"),
        }
    }
}

impl FromStr for DisorderLaw {
    type Err = Error;

    /// Parses `zero`, `const:h`, `gauss:sigma` or `rademacher:h`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let value = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::InvalidParameter(format!("disorder law {s:?} needs a parameter")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("disorder law {s:?}: {e}")))
        };
        let law = match name {
            "zero" if arg.is_none() => Self::Zero,
            "const" => Self::Constant { h: value(arg)? },
            "gauss" => Self::Gaussian { sigma: value(arg)? },
            "rademacher" => Self::Rademacher { h: value(arg)? },
            _ => return Err(Error::InvalidParameter(format!("unknown disorder law {s:?}"))),
        };
        law.validated()
    }
}

/// One realization of the fields, indexed like the sites of its volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldConfig(Vec<f64>);

impl FieldConfig {
    pub fn new(vol: &Volume, values: Vec<f64>) -> Result<Self> {
        if values.len() != vol.len() {
            return Err(Error::DimensionMismatch {
                expected: vol.len(),
                found: values.len(),
            });
        }
        Ok(Self(values))
    }

    pub fn zeros(vol: &Volume) -> Self {
        Self(vec![0.0; vol.len()])
    }

    pub fn constant(vol: &Volume, h: f64) -> Self {
        Self(vec![h; vol.len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, h: f64) -> Self {
        Self(self.0.iter().map(|x| h * x).collect())
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn restricted(&self, indices: &[usize]) -> Vec<f64> {
        indices.iter().map(|&i| self.0[i]).collect()
    }
}

/// Draws an i.i.d. realization. Site `i` reads stream `i` of the generator
/// keyed by `seed`, so the result does not depend on iteration order.
pub fn sample_disorder(law: DisorderLaw, vol: &Volume, seed: u64) -> Result<FieldConfig> {
    let law = law.validated()?;
    let values = (0..vol.len())
        .map(|i| {
            let mut r = rng::stream(rng::derive_seed(seed, rng::tags::DISORDER, 0), i as u64);
            law.draw(&mut r)
        })
        .collect();
    Ok(FieldConfig(values))
}

/// File form `{"d": .., "L" | "sites": .., "eta": [..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub d: usize,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<Site>>,
    pub eta: Vec<f64>,
}

impl FieldFile {
    pub fn new(vol: &Volume, eta: &FieldConfig) -> Self {
        let v = VolumeJson::from(vol.clone());
        Self {
            d: v.d,
            half_width: v.half_width,
            sites: v.sites,
            eta: eta.values().to_vec(),
        }
    }

    pub fn into_parts(self) -> Result<(Volume, FieldConfig)> {
        let vol = Volume::try_from(VolumeJson {
            d: self.d,
            half_width: self.half_width,
            sites: self.sites,
        })?;
        let eta = FieldConfig::new(&vol, self.eta)?;
        Ok((vol, eta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_laws() {
        let v = Volume::centered_box(2, 1).unwrap();
        let z = sample_disorder(DisorderLaw::Zero, &v, 99).unwrap();
        assert!(z.values().iter().all(|&x| x == 0.0));
        let c = sample_disorder(DisorderLaw::Constant { h: 0.3 }, &v, 1).unwrap();
        assert!(c.values().iter().all(|&x| x == 0.3));
        assert_eq!(c.len(), 9);
    }

    #[test]
    fn parse_and_display() {
        for s in ["zero", "const:0.3", "gauss:1", "rademacher:2.5"] {
            let law: DisorderLaw = s.parse().unwrap();
            assert_eq!(law, law.to_string().parse().unwrap());
        }
        assert_eq!("gauss:2".parse::<DisorderLaw>().unwrap().second_moment(), 4.0);
        assert!("gauss:-1".parse::<DisorderLaw>().is_err());
        assert!("gauss".parse::<DisorderLaw>().is_err());
        assert!("cauchy:1".parse::<DisorderLaw>().is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let v = Volume::centered_box(2, 3).unwrap();
        let law = DisorderLaw::Gaussian { sigma: 1.0 };
        let a = sample_disorder(law, &v, 7).unwrap();
        assert_eq!(a, sample_disorder(law, &v, 7).unwrap());
        assert_ne!(a, sample_disorder(law, &v, 8).unwrap());
    }

    #[test]
    fn gaussian_second_moment_self_check() {
        let v = Volume::centered_box(2, 8).unwrap();
        let law = DisorderLaw::Gaussian { sigma: 1.0 };
        let mut squares = Vec::new();
        for r in 0..10_000u64 {
            let eta = sample_disorder(law, &v, rng::derive_seed(2024, 0, r)).unwrap();
            squares.extend(eta.values().iter().map(|x| x * x));
        }
        let n = squares.len() as f64;
        let mean = squares.iter().sum::<f64>() / n;
        let var = squares.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 1.0).abs() < 3.0 * (var / n).sqrt(), "mean {mean}");
    }

    #[test]
    fn symmetric_laws_have_zero_mean() {
        let v = Volume::centered_box(2, 4).unwrap();
        for law in [DisorderLaw::Gaussian { sigma: 2.0 }, DisorderLaw::Rademacher { h: 1.5 }] {
            assert!(law.is_symmetric());
            let mut xs = Vec::new();
            for r in 0..400u64 {
                xs.extend_from_slice(sample_disorder(law, &v, r).unwrap().values());
            }
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let se = (law.second_moment() / n).sqrt();
            assert!(mean.abs() < 4.0 * se, "{law}: mean {mean}");
        }
        assert!(!DisorderLaw::Constant { h: 1.0 }.is_symmetric());
    }

    #[test]
    fn field_file_round_trip() {
        let v = Volume::centered_box(2, 1).unwrap();
        let eta = sample_disorder(DisorderLaw::Gaussian { sigma: 1.0 }, &v, 3).unwrap();
        let text = serde_json::to_string(&FieldFile::new(&v, &eta)).unwrap();
        assert!(text.starts_with(r#"{"d":2,"L":1,"eta":["#));
        let (v2, eta2) = serde_json::from_str::<FieldFile>(&text).unwrap().into_parts().unwrap();
        assert_eq!((v2, eta2), (v, eta));
        let bad = r#"{"d":2,"L":1,"eta":[1.0]}"#;
        assert!(serde_json::from_str::<FieldFile>(bad).unwrap().into_parts().is_err());
    }
}
