use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted set of lattice sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RegionRepr", into = "RegionRepr")]
pub struct Region {
    n_sites: usize,
    sites: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionRepr {
    n_sites: usize,
    sites: Vec<usize>,
}

impl TryFrom<RegionRepr> for Region {
    type Error = Error;
    fn try_from(r: RegionRepr) -> Result<Self> {
        Region::new(r.n_sites, r.sites)
    }
}

impl From<Region> for RegionRepr {
    fn from(r: Region) -> Self {
        RegionRepr { n_sites: r.n_sites, sites: r.sites }
    }
}

impl Region {
    /// Duplicate sites are merged; out-of-range sites are an error.
    pub fn new(n_sites: usize, sites: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = sites.into_iter().collect();
        if let Some(&bad) = set.iter().find(|&&s| s >= n_sites) {
            return Err(Error::InvalidRegion(format!("site {bad} outside [0, {n_sites})")));
        }
        Ok(Self { n_sites, sites: set.into_iter().collect() })
    }

    pub fn full(n_sites: usize) -> Self {
        Self { n_sites, sites: (0..n_sites).collect() }
    }

    /// `len` consecutive sites starting at `start`, wrapping periodically.
    pub fn interval(n_sites: usize, start: usize, len: usize) -> Result<Self> {
        if len > n_sites {
            return Err(Error::InvalidRegion(format!("interval of {len} sites on {n_sites}")));
        }
        Self::new(n_sites, (0..len).map(|i| (start + i) % n_sites))
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    pub fn complement(&self) -> Self {
        Self {
            n_sites: self.n_sites,
            sites: (0..self.n_sites).filter(|s| !self.contains(*s)).collect(),
        }
    }

    /// Periodic distance from `site` to the nearest site of the region.
    pub fn distance_to(&self, site: usize) -> Option<usize> {
        let n = self.n_sites;
        self.sites
            .iter()
            .map(|&s| {
                let d = s.abs_diff(site);
                d.min(n - d)
            })
            .min()
    }

    /// All sites within periodic distance `radius` of the region.
    pub fn dilate(&self, radius: usize) -> Self {
        let sites = (0..self.n_sites).filter(|&x| self.distance_to(x).is_some_and(|d| d <= radius));
        Self { n_sites: self.n_sites, sites: sites.collect() }
    }

    /// True when the sites form one periodic run.
    pub fn is_contiguous(&self) -> bool {
        if self.sites.is_empty() || self.sites.len() == self.n_sites {
            return true;
        }
        // count boundaries between "in" and "out" around the ring
        let inside: Vec<bool> = (0..self.n_sites).map(|x| self.contains(x)).collect();
        let transitions = (0..self.n_sites).filter(|&x| inside[x] != inside[(x + 1) % self.n_sites]).count();
        transitions == 2
    }

    /// Phase-space indices of the region in `(φ_0..φ_{n-1}, π_0..π_{n-1})` ordering:
    /// all `φ` entries first, then all `π` entries.
    pub fn phase_space_indices(&self) -> Vec<usize> {
        self.sites.iter().copied().chain(self.sites.iter().map(|s| s + self.n_sites)).collect()
    }
}
