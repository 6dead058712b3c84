//! Pure Gaussian field states in lattice phase space.
//!
//! Phase-space vectors are ordered `(φ_0, …, φ_{n-1}, π_0, …, π_{n-1})` with
//! `[φ_x, π_y] = i δ_xy / a`. Covariances are symmetrized second central
//! moments. Symplectic spectra are reported for the canonical pairs
//! `(φ_x, a π_x)`, so a pure state has every symplectic eigenvalue `1/2`.
//! Matrices symplectic for `Ω` stay symplectic under that rescaling, so
//! local operations and propagators are checked against the plain `Ω`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{build_kernel, KernelRole};
use crate::lattice::{circulant_dense, circulant_row, LatticeSpec};
use crate::linalg;
use crate::region::Region;
use crate::symplectic::{self, passive_from_unitary, symplectic_inverse, symplectic_residual, williamson};

/// Local operations must be symplectic to this accuracy.
pub const SYMPLECTIC_TOLERANCE: f64 = 1e-10;

/// Symplectic eigenvalues closer than this are treated as one degenerate block.
pub const DEGENERACY_GAP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub spec: LatticeSpec,
    #[serde(with = "crate::io::flat_vector")]
    pub mean: DVector<f64>,
    #[serde(with = "crate::io::row_major")]
    pub covariance: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(spec: LatticeSpec, mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        spec.validate()?;
        let dim = 2 * spec.n_sites;
        if mean.len() != dim {
            return Err(Error::LengthMismatch { expected: dim, got: mean.len() });
        }
        if covariance.nrows() != dim || covariance.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "covariance is {}x{}, expected {dim}x{dim}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let asym = (&covariance - covariance.transpose()).amax();
        if asym > 1e-12 * covariance.amax().max(1.0) {
            return Err(Error::Precondition(format!("covariance not symmetric (asymmetry {asym:e})")));
        }
        Ok(Self { spec, mean, covariance })
    }

    pub fn n_sites(&self) -> usize {
        self.spec.n_sites
    }

    pub fn phi_mean(&self) -> &[f64] {
        &self.mean.as_slice()[..self.n_sites()]
    }

    pub fn pi_mean(&self) -> &[f64] {
        &self.mean.as_slice()[self.n_sites()..]
    }

    /// Covariance of the canonical pairs `(φ, a π)`.
    pub fn canonical_covariance(&self) -> DMatrix<f64> {
        let scale = canonical_scale(self.n_sites(), self.spec.spacing);
        DMatrix::from_fn(self.covariance.nrows(), self.covariance.ncols(), |i, j| {
            scale[i] * self.covariance[(i, j)] * scale[j]
        })
    }

    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        symplectic::symplectic_eigenvalues(&self.canonical_covariance())
    }

    /// `max_k |ν_k - 1/2|`.
    pub fn purity_defect(&self) -> f64 {
        self.symplectic_eigenvalues().iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of `V_can + (i/2) Ω` (uncertainty relation).
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        symplectic::uncertainty_min_eigenvalue(&self.canonical_covariance())
    }
}

fn canonical_scale(n: usize, spacing: f64) -> Vec<f64> {
    (0..2 * n).map(|i| if i < n { 1.0 } else { spacing }).collect()
}

/// Vacuum: `⟨φφ⟩ = ½ E⁻¹`, `⟨ππ⟩ = ½ E`, `⟨φπ⟩ = 0`.
pub fn vacuum(spec: &LatticeSpec) -> Result<GaussianState> {
    let e = build_kernel(spec, KernelRole::Energy, 0.0)?;
    let e_inv = e.integral_inverse()?;
    let n = spec.n_sites;
    let mut cov = DMatrix::zeros(2 * n, 2 * n);
    cov.view_mut((0, 0), (n, n)).copy_from(&(e_inv.entries() * 0.5));
    cov.view_mut((n, n), (n, n)).copy_from(&(e.entries() * 0.5));
    GaussianState::new(*spec, DVector::zeros(2 * n), cov)
}

/// Displaced vacuum whose mean is the classical field configuration.
pub fn coherent(spec: &LatticeSpec, phi_class: &[f64], pi_class: &[f64]) -> Result<GaussianState> {
    let n = spec.n_sites;
    for v in [phi_class, pi_class] {
        if v.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: v.len() });
        }
    }
    let mut state = vacuum(spec)?;
    state.mean = DVector::from_iterator(2 * n, phi_class.iter().chain(pi_class).copied());
    Ok(state)
}

/// Exact free evolution on `(φ, π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticPropagator {
    pub spec: LatticeSpec,
    pub time: f64,
    /// `[[C, a g⁻¹], [-M² a g⁻¹, C]]` with `C = a ∂_t g⁻¹`.
    #[serde(with = "crate::io::row_major")]
    pub matrix: DMatrix<f64>,
}

impl SymplecticPropagator {
    pub fn symplectic_residual(&self) -> f64 {
        symplectic_residual(&self.matrix)
    }

    /// Upper-right block, `a · g⁻¹(t)`.
    pub fn commutator_block(&self) -> DMatrix<f64> {
        let n = self.spec.n_sites;
        self.matrix.view((0, n), (n, n)).into_owned()
    }
}

pub fn propagator(spec: &LatticeSpec, t: f64) -> Result<SymplecticPropagator> {
    spec.validate()?;
    let n = spec.n_sites;
    let a = spec.spacing;
    let cosine = build_kernel(spec, KernelRole::DGInvDt, t)?;
    let ginv = build_kernel(spec, KernelRole::GInv, t)?;
    // -M² a g⁻¹ has mode weights -ω² sin(ωt)/ω
    let lower_weights: Vec<f64> =
        ginv.weights.iter().enumerate().map(|(k, w)| -spec.omega_squared(k) * w).collect();
    let lower = circulant_dense(&circulant_row(&lower_weights));
    let c = cosine.entries() * a;
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(&c);
    s.view_mut((n, n), (n, n)).copy_from(&c);
    s.view_mut((0, n), (n, n)).copy_from(&(ginv.entries() * a));
    s.view_mut((n, 0), (n, n)).copy_from(&lower);
    Ok(SymplecticPropagator { spec: *spec, time: t, matrix: s })
}

pub fn evolve(state: &GaussianState, t: f64) -> Result<GaussianState> {
    let s = propagator(&state.spec, t)?;
    Ok(apply_propagator(state, &s))
}

pub fn apply_propagator(state: &GaussianState, s: &SymplecticPropagator) -> GaussianState {
    let mean = &s.matrix * &state.mean;
    let cov = &s.matrix * &state.covariance * s.matrix.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    GaussianState { spec: state.spec, mean, covariance: cov }
}

/// First and second moments of a region; stands in for the reduced density
/// matrix of a Gaussian state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedDescriptor {
    pub region: Region,
    /// `(φ_R, π_R)`.
    pub mean_block: Vec<f64>,
    #[serde(with = "crate::io::row_major")]
    pub cov_block: DMatrix<f64>,
}

pub fn restrict(state: &GaussianState, region: &Region) -> Result<ReducedDescriptor> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if region.n_sites() != state.n_sites() {
        return Err(Error::InvalidRegion(format!(
            "region on {} sites, state on {}",
            region.n_sites(),
            state.n_sites()
        )));
    }
    let idx = region.phase_space_indices();
    let mean_block = idx.iter().map(|&i| state.mean[i]).collect();
    let cov_block = state.covariance.select_rows(&idx).select_columns(&idx);
    Ok(ReducedDescriptor { region: region.clone(), mean_block, cov_block })
}

/// `max(‖Δmean‖_max, ‖Δcov‖_max)`.
pub fn descriptor_distance(d1: &ReducedDescriptor, d2: &ReducedDescriptor) -> Result<f64> {
    if d1.region != d2.region {
        return Err(Error::RegionMismatch);
    }
    let dm = d1.mean_block.iter().zip(&d2.mean_block).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(dm.max((&d1.cov_block - &d2.cov_block).amax()))
}

fn check_region(state: &GaussianState, region: &Region) -> Result<()> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if region.n_sites() != state.n_sites() {
        return Err(Error::InvalidRegion(format!(
            "region on {} sites, state on {}",
            region.n_sites(),
            state.n_sites()
        )));
    }
    Ok(())
}

/// Weyl displacement supported in `region`; `dphi`, `dpi` are full-lattice
/// vectors that must vanish outside the region.
pub fn apply_local_displacement(
    state: &GaussianState,
    region: &Region,
    dphi: &[f64],
    dpi: &[f64],
) -> Result<GaussianState> {
    check_region(state, region)?;
    let n = state.n_sites();
    for v in [dphi, dpi] {
        if v.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: v.len() });
        }
        if let Some(site) = (0..n).find(|&x| !region.contains(x) && v[x] != 0.0) {
            return Err(Error::SupportViolation { site, value: v[site] });
        }
    }
    let mut out = state.clone();
    for &x in region.sites() {
        out.mean[x] += dphi[x];
        out.mean[n + x] += dpi[x];
    }
    Ok(out)
}

/// Conjugate the region's phase-space block by `local_sym` (in `(φ_R, π_R)`
/// ordering). Entries that involve only complement indices are copied
/// untouched.
pub fn apply_local_symplectic(
    state: &GaussianState,
    region: &Region,
    local_sym: &DMatrix<f64>,
) -> Result<GaussianState> {
    check_region(state, region)?;
    let idx = region.phase_space_indices();
    let r2 = idx.len();
    if local_sym.nrows() != r2 || local_sym.ncols() != r2 {
        return Err(Error::ShapeMismatch(format!(
            "local symplectic is {}x{}, region needs {r2}x{r2}",
            local_sym.nrows(),
            local_sym.ncols()
        )));
    }
    let residual = symplectic_residual(local_sym);
    if !(residual <= SYMPLECTIC_TOLERANCE) {
        return Err(Error::NotSymplectic { residual });
    }
    let dim = state.covariance.nrows();
    let mut out = state.clone();

    let mean_r = DVector::from_iterator(r2, idx.iter().map(|&i| state.mean[i]));
    let new_mean_r = local_sym * mean_r;
    for (k, &i) in idx.iter().enumerate() {
        out.mean[i] = new_mean_r[k];
    }

    // rows R of T·Σ: T Σ[R, :]
    let rows = state.covariance.select_rows(&idx);
    let new_rows = local_sym * rows;
    // region block gets the second factor: (T Σ[R,:])[:, R] Tᵀ
    let new_block = new_rows.select_columns(&idx) * local_sym.transpose();
    for (k, &i) in idx.iter().enumerate() {
        for j in 0..dim {
            out.covariance[(i, j)] = new_rows[(k, j)];
            out.covariance[(j, i)] = new_rows[(k, j)];
        }
    }
    for (k, &i) in idx.iter().enumerate() {
        for (l, &j) in idx.iter().enumerate() {
            out.covariance[(i, j)] = 0.5 * (new_block[(k, l)] + new_block[(l, k)]);
        }
    }
    Ok(out)
}

/// A Gaussian unitary supported in a region: symplectic conjugation followed
/// by a displacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalGaussianUnitary {
    pub region: Region,
    /// Acts on `(φ_R, π_R)`.
    #[serde(with = "crate::io::row_major")]
    pub symplectic: DMatrix<f64>,
    pub dphi: Vec<f64>,
    pub dpi: Vec<f64>,
    /// `max(‖Δmean‖, ‖Δcov‖)` between the mapped first state and the second.
    pub residual: f64,
}

impl LocalGaussianUnitary {
    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        let moved = apply_local_symplectic(state, &self.region, &self.symplectic)?;
        apply_local_displacement(&moved, &self.region, &self.dphi, &self.dpi)
    }
}

/// Find a Gaussian unitary on `region` mapping pure `s1` to pure `s2`, given
/// that both agree on the complement.
///
/// Each state's region block is brought to Williamson form `S_i A_i S_iᵀ = N`.
/// The remaining freedom is a passive rotation inside each block of equal
/// symplectic eigenvalues; it is fixed by a unitary Procrustes fit of the
/// normal-form cross-correlations with the complement. The result is
/// `T = S_2⁻¹ O S_1`, which is not unique when the spectrum is degenerate.
pub fn find_local_gaussian_unitary(
    s1: &GaussianState,
    s2: &GaussianState,
    region: &Region,
    tol: f64,
) -> Result<LocalGaussianUnitary> {
    check_region(s1, region)?;
    if s1.spec != s2.spec {
        return Err(Error::Precondition("states live on different lattices".into()));
    }
    let n = s1.n_sites();
    let complement = region.complement();
    if !complement.is_empty() {
        let distance = descriptor_distance(&restrict(s1, &complement)?, &restrict(s2, &complement)?)?;
        if !(distance <= tol) {
            return Err(Error::ComplementMismatch { distance, tolerance: tol });
        }
    }
    for (k, s) in [s1, s2].iter().enumerate() {
        let defect = s.purity_defect();
        if defect > 1e-6 {
            return Err(Error::Precondition(format!("state {} is not pure (|ν - 1/2| = {defect:e})", k + 1)));
        }
    }

    let r = region.len();
    let r_idx = region.phase_space_indices();
    let c_idx = complement.phase_space_indices();
    let can1 = s1.canonical_covariance();
    let can2 = s2.canonical_covariance();
    let a1 = can1.select_rows(&r_idx).select_columns(&r_idx);
    let a2 = can2.select_rows(&r_idx).select_columns(&r_idx);
    let w1 = williamson(&a1)?;
    let w2 = williamson(&a2)?;
    let spectrum_gap = w1.nu.iter().zip(&w2.nu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if spectrum_gap > tol.max(1e-9) {
        return Err(Error::ComplementMismatch { distance: spectrum_gap, tolerance: tol });
    }

    let mut passive = DMatrix::<Complex64>::identity(r, r);
    if !c_idx.is_empty() {
        let b1 = &w1.symplectic * can1.select_rows(&r_idx).select_columns(&c_idx);
        let b2 = &w2.symplectic * can2.select_rows(&r_idx).select_columns(&c_idx);
        let cols = b1.ncols();
        for block in degenerate_blocks(&w1.nu) {
            let z = |b: &DMatrix<f64>| {
                DMatrix::from_fn(block.len(), cols, |i, j| {
                    Complex64::new(b[(block[i], j)], b[(r + block[i], j)])
                })
            };
            let (z1, z2) = (z(&b1), z(&b2));
            let cross = &z2 * z1.adjoint();
            let rot = linalg::polar_unitary(&cross)?;
            for (i, &bi) in block.iter().enumerate() {
                for (j, &bj) in block.iter().enumerate() {
                    passive[(bi, bj)] = rot[(i, j)];
                }
            }
        }
    }
    let o = passive_from_unitary(&passive);
    let t_can = symplectic_inverse(&w2.symplectic) * o * &w1.symplectic;
    // back to (φ, π): T = K⁻¹ T_can K with K = diag(1, a)
    let a = s1.spec.spacing;
    let scale = canonical_scale(r, a);
    let t_phys = DMatrix::from_fn(2 * r, 2 * r, |i, j| t_can[(i, j)] * scale[j] / scale[i]);

    let mean1 = DVector::from_iterator(2 * r, r_idx.iter().map(|&i| s1.mean[i]));
    let moved = &t_phys * mean1;
    let mut dphi = vec![0.0; n];
    let mut dpi = vec![0.0; n];
    for (k, &x) in region.sites().iter().enumerate() {
        dphi[x] = s2.mean[x] - moved[k];
        dpi[x] = s2.mean[n + x] - moved[r + k];
    }
    let mut op = LocalGaussianUnitary { region: region.clone(), symplectic: t_phys, dphi, dpi, residual: 0.0 };
    let mapped = op.apply(s1)?;
    let full = Region::full(n);
    op.residual = descriptor_distance(&restrict(&mapped, &full)?, &restrict(s2, &full)?)?;
    if !(op.residual <= tol) {
        return Err(Error::DegenerateSpectrum { residual: op.residual });
    }
    Ok(op)
}

/// Group ascending eigenvalues into runs whose neighbours differ by less than
/// [`DEGENERACY_GAP`].
fn degenerate_blocks(nu: &[f64]) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (i, v) in nu.iter().enumerate() {
        match blocks.last_mut() {
            Some(last) if (v - nu[*last.last().unwrap()]).abs() < DEGENERACY_GAP => last.push(i),
            _ => blocks.push(vec![i]),
        }
    }
    blocks
}
