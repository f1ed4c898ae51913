//! Finite subsets of the hypercubic lattice with their nearest-neighbor edges.
//!
//! Sites are stored in lexicographic order of their coordinates. That order is
//! the canonical index for every vector and matrix in the crate.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Site = Vec<i32>;

/// A finite volume together with its internal and boundary edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VolumeJson", into = "VolumeJson")]
pub struct Volume {
    d: usize,
    half_width: Option<u32>,
    sites: Vec<Site>,
    #[serde(skip)]
    index: HashMap<Site, usize>,
    internal_edges: Vec<(usize, usize)>,
    boundary_edges: Vec<(usize, Site)>,
    neighbors: Vec<Vec<usize>>,
    exterior: Vec<usize>,
}

impl Volume {
    /// The centered box of side `2L + 1`.
    pub fn centered_box(d: usize, half_width: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        let side = 2 * u64::from(half_width) + 1;
        let count = usize::try_from(side)
            .ok()
            .and_then(|s| s.checked_pow(d as u32))
            .filter(|&n| n <= isize::MAX as usize / 64)
            .ok_or(Error::VolumeOverflow { d, side })?;
        let lo = -(half_width as i64);
        let mut sites = Vec::with_capacity(count);
        let mut cur = vec![lo; d];
        for _ in 0..count {
            sites.push(cur.iter().map(|&x| x as i32).collect());
            // odometer, last coordinate fastest
            for a in (0..d).rev() {
                if cur[a] < half_width as i64 {
                    cur[a] += 1;
                    break;
                }
                cur[a] = lo;
            }
        }
        let mut vol = Self::build(d, sites);
        vol.half_width = Some(half_width);
        Ok(vol)
    }

    /// An axis-aligned rectangle `[0, n_1) x ... x [0, n_d)`.
    pub fn rectangle(sides: &[usize]) -> Result<Self> {
        let d = sides.len();
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        let count = sides
            .iter()
            .try_fold(1usize, |acc, &s| acc.checked_mul(s))
            .ok_or(Error::VolumeOverflow {
                d,
                side: sides.iter().copied().max().unwrap_or(0) as u64,
            })?;
        if count == 0 {
            return Err(Error::EmptyVolume);
        }
        let mut sites = Vec::with_capacity(count);
        let mut cur = vec![0usize; d];
        for _ in 0..count {
            sites.push(cur.iter().map(|&x| x as i32).collect());
            for a in (0..d).rev() {
                if cur[a] + 1 < sides[a] {
                    cur[a] += 1;
                    break;
                }
                cur[a] = 0;
            }
        }
        Ok(Self::build(d, sites))
    }

    /// Arbitrary finite set of sites. Sites are sorted into canonical order.
    pub fn from_sites(d: usize, sites: Vec<Site>) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        if sites.is_empty() {
            return Err(Error::EmptyVolume);
        }
        for s in &sites {
            if s.len() != d {
                return Err(Error::SiteDimension {
                    site: s.clone(),
                    expected: d,
                    found: s.len(),
                });
            }
        }
        let mut sorted = sites;
        sorted.sort();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateSite(w[0].clone()));
            }
        }
        Ok(Self::build(d, sorted))
    }

    fn build(d: usize, sites: Vec<Site>) -> Self {
        let index: HashMap<Site, usize> = sites
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let mut internal_edges = Vec::new();
        let mut boundary_edges = Vec::new();
        let mut neighbors = vec![Vec::with_capacity(2 * d); sites.len()];
        let mut exterior = vec![0usize; sites.len()];
        for (i, s) in sites.iter().enumerate() {
            for a in 0..d {
                for step in [-1, 1] {
                    let mut t = s.clone();
                    t[a] += step;
                    match index.get(&t) {
                        Some(&j) => {
                            neighbors[i].push(j);
                            if step == 1 {
                                internal_edges.push((i, j));
                            }
                        }
                        None => {
                            exterior[i] += 1;
                            boundary_edges.push((i, t));
                        }
                    }
                }
            }
        }
        Self {
            d,
            half_width: None,
            sites,
            index,
            internal_edges,
            boundary_edges,
            neighbors,
            exterior,
        }
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// `Some(L)` when the volume was built as the centered box of side `2L + 1`.
    pub fn half_width(&self) -> Option<u32> {
        self.half_width
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &Site {
        &self.sites[i]
    }

    pub fn index_of(&self, site: &[i32]) -> Option<usize> {
        self.index.get(site).copied()
    }

    /// Unordered internal nearest-neighbor pairs, each listed once with `i < j`.
    pub fn internal_edges(&self) -> &[(usize, usize)] {
        &self.internal_edges
    }

    /// Pairs (inside site index, outside neighbor coordinates).
    pub fn boundary_edges(&self) -> &[(usize, Site)] {
        &self.boundary_edges
    }

    /// Internal neighbors of site `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Number of neighbors of site `i` outside the volume.
    pub fn exterior_degree(&self, i: usize) -> usize {
        self.exterior[i]
    }

    pub fn coordination(&self) -> usize {
        2 * self.d
    }

    /// Sub-volume indices of the sites at the origin, if present.
    pub fn origin(&self) -> Option<usize> {
        self.index_of(&vec![0; self.d])
    }
}

/// Wire form of a volume: `{"d": .., "L": ..}` for centered boxes,
/// `{"d": .., "sites": [[..], ..]}` otherwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeJson {
    pub d: usize,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<Site>>,
}

impl TryFrom<VolumeJson> for Volume {
    type Error = Error;

    fn try_from(v: VolumeJson) -> Result<Self> {
        match (v.half_width, v.sites) {
            (Some(l), None) => Volume::centered_box(v.d, l),
            (None, Some(sites)) => Volume::from_sites(v.d, sites),
            _ => Err(Error::InvalidParameter(
                "volume needs exactly one of \"L\" or \"sites\"".into(),
            )),
        }
    }
}

impl From<Volume> for VolumeJson {
    fn from(v: Volume) -> Self {
        match v.half_width {
            Some(l) => VolumeJson {
                d: v.d,
                half_width: Some(l),
                sites: None,
            },
            None => VolumeJson {
                d: v.d,
                half_width: None,
                sites: Some(v.sites),
            },
        }
    }
}
