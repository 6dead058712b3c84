//! Lattice discretization and mode frequencies.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the on-shell frequency of a lattice momentum mode is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    /// `ω² = m² + (2/a)² sin²(k a / 2)`, the nearest-neighbour Laplacian.
    Lattice,
    /// `ω² = m² + k²` with `k` the signed lattice momentum.
    ContinuumSampled,
}

/// Periodic 1-D lattice in units with `ħ = c = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub n_sites: usize,
    pub spacing: f64,
    pub mass: f64,
    pub dispersion: Dispersion,
}

impl LatticeSpec {
    pub fn new(n_sites: usize, spacing: f64, mass: f64, dispersion: Dispersion) -> Result<Self> {
        let spec = Self { n_sites, spacing, mass, dispersion };
        spec.validate()?;
        Ok(spec)
    }

    /// Lattice dispersion, unit spacing.
    pub fn unit(n_sites: usize, mass: f64) -> Result<Self> {
        Self::new(n_sites, 1.0, mass, Dispersion::Lattice)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::InvalidLattice("n_sites must be at least 1".into()));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::InvalidLattice(format!("spacing must be positive, got {}", self.spacing)));
        }
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Err(Error::InvalidLattice(format!("mass must be non-negative, got {}", self.mass)));
        }
        Ok(())
    }

    /// Total length of the periodic box.
    pub fn length(&self) -> f64 {
        self.n_sites as f64 * self.spacing
    }

    /// Signed momentum of mode `k`, in `(-π/a, π/a]`.
    pub fn momentum(&self, mode_index: usize) -> f64 {
        let n = self.n_sites as i64;
        let k = mode_index as i64;
        let signed = if 2 * k <= n { k } else { k - n };
        2.0 * PI * signed as f64 / self.length()
    }

    /// Squared frequency `ω_k²`; this is also the eigenvalue of the spatial
    /// quadratic form `M² = -∇² + m²`.
    pub fn omega_squared(&self, mode_index: usize) -> f64 {
        let m2 = self.mass * self.mass;
        match self.dispersion {
            Dispersion::Lattice => {
                let s = (PI * mode_index as f64 / self.n_sites as f64).sin();
                m2 + (2.0 / self.spacing).powi(2) * s * s
            }
            Dispersion::ContinuumSampled => {
                let p = self.momentum(mode_index);
                m2 + p * p
            }
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_sites).map(|k| dispersion(self, k)).collect()
    }

    /// Group velocity `dω/dk` of mode `k` (zero for a massless zero mode).
    pub fn group_velocity(&self, mode_index: usize) -> f64 {
        let w = dispersion(self, mode_index);
        if w == 0.0 {
            return 0.0;
        }
        let p = self.momentum(mode_index);
        match self.dispersion {
            // d(ω²)/dk = (4/a²) sin(ka/2) cos(ka/2) a = (2/a) sin(ka)
            Dispersion::Lattice => (p * self.spacing).sin() / (self.spacing * w),
            Dispersion::ContinuumSampled => p / w,
        }
    }

    /// First row of the circulant `M²` matrix (plain matrix, no spacing factors).
    pub fn quadratic_form_row(&self) -> Vec<f64> {
        let weights: Vec<f64> = (0..self.n_sites).map(|k| self.omega_squared(k)).collect();
        circulant_row(&weights)
    }

    /// Dense `M² = -∇² + m²` consistent with the dispersion.
    pub fn quadratic_form(&self) -> DMatrix<f64> {
        match self.dispersion {
            Dispersion::Lattice => {
                let mut m2 = -self.laplacian();
                for i in 0..self.n_sites {
                    m2[(i, i)] += self.mass * self.mass;
                }
                m2
            }
            Dispersion::ContinuumSampled => circulant_dense(&self.quadratic_form_row()),
        }
    }

    /// Spatial Laplacian as a plain matrix acting on site values.
    ///
    /// For the lattice dispersion this is the nearest-neighbour stencil
    /// `(φ_{x+1} + φ_{x-1} - 2φ_x)/a²` with periodic wrap; for the sampled
    /// dispersion it is the circulant with eigenvalues `-k²`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.n_sites;
        match self.dispersion {
            Dispersion::Lattice => {
                let inv_a2 = 1.0 / (self.spacing * self.spacing);
                let mut lap = DMatrix::zeros(n, n);
                for i in 0..n {
                    lap[(i, i)] -= 2.0 * inv_a2;
                    lap[(i, (i + 1) % n)] += inv_a2;
                    lap[(i, (i + n - 1) % n)] += inv_a2;
                }
                lap
            }
            Dispersion::ContinuumSampled => {
                let weights: Vec<f64> = (0..n).map(|k| -self.momentum(k).powi(2)).collect();
                circulant_dense(&circulant_row(&weights))
            }
        }
    }
}

/// On-shell frequency of mode `mode_index`.
pub fn dispersion(spec: &LatticeSpec, mode_index: usize) -> f64 {
    spec.omega_squared(mode_index).sqrt()
}

/// First row `c(d) = (1/n) Σ_k w_k cos(2π k d / n)` of the circulant with
/// mode eigenvalues `w_k`. Requires `w_k = w_{n-k}`.
pub fn circulant_row(weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    let table: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).cos()).collect();
    let mut row = vec![0.0; n];
    for d in 0..=n / 2 {
        let mut acc = 0.0;
        for (k, w) in weights.iter().enumerate() {
            acc += w * table[(k * d) % n];
        }
        row[d] = acc / n as f64;
        // mirror so the dense matrix is exactly symmetric
        row[(n - d) % n] = row[d];
    }
    row
}

pub fn circulant_dense(row: &[f64]) -> DMatrix<f64> {
    let n = row.len();
    DMatrix::from_fn(n, n, |i, j| row[(j + n - i) % n])
}
