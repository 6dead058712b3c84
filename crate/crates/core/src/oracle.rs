//! Brute-force reference: few-site oscillator chains in a truncated Fock
//! basis, plus a position-grid single-oscillator propagator.
//!
//! Per site the ladder basis has frequency `ω_r`. With canonical momentum
//! `P = a π` the site operators are `φ = (b + b†)/√(2aω_r)` and
//! `P = i√(aω_r/2)(b† − b)`, and
//! `H = Σ_x P_x²/(2a) + (a/2) Σ_xy M²_xy φ_x φ_y`.
//! Product states are indexed lexicographically with site 0 most significant.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian;
use crate::kernels::{build_kernel, KernelRole};
use crate::lattice::LatticeSpec;
use crate::linalg;
use crate::region::Region;
use crate::superposition;

pub const MAX_SITES: usize = 5;
pub const MAX_CUTOFF: usize = 12;
/// Cutoff limit for a lone oscillator, where the basis stays tiny.
pub const MAX_SINGLE_SITE_CUTOFF: usize = 64;
pub const MAX_TOTAL_DIM: usize = 250_000;
/// Largest product dimension that is diagonalized densely.
pub const DENSE_LIMIT: usize = 4096;
/// Coherent displacements beyond this per-site amplitude lose accuracy at the
/// largest cutoff.
pub const AMPLITUDE_WARNING: f64 = 1.0;

const PRODUCT_PAD: usize = 2;
const DISPLACEMENT_PAD: usize = 60;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockLattice {
    pub spec: LatticeSpec,
    pub cutoff: usize,
    pub ref_frequency: f64,
}

impl FockLattice {
    /// Ladder frequency defaults to `√(m² + 2/a²)`, the middle of the band.
    pub fn new(spec: LatticeSpec, cutoff: usize) -> Result<Self> {
        let ref_frequency = Self::default_ref_frequency(&spec)?;
        Self::with_ref_frequency(spec, cutoff, ref_frequency)
    }

    pub fn with_ref_frequency(spec: LatticeSpec, cutoff: usize, ref_frequency: f64) -> Result<Self> {
        let fl = Self { spec, cutoff, ref_frequency };
        fl.validate()?;
        Ok(fl)
    }

    pub fn default_ref_frequency(spec: &LatticeSpec) -> Result<f64> {
        spec.validate()?;
        Ok((spec.mass * spec.mass + 2.0 / (spec.spacing * spec.spacing)).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.spec.n_sites > MAX_SITES {
            return Err(Error::InvalidLattice(format!("oracle supports at most {MAX_SITES} sites")));
        }
        let max_cutoff = if self.spec.n_sites == 1 { MAX_SINGLE_SITE_CUTOFF } else { MAX_CUTOFF };
        if !(2..=max_cutoff).contains(&self.cutoff) {
            return Err(Error::InvalidLattice(format!("cutoff must lie in [2, {max_cutoff}]")));
        }
        if !(self.ref_frequency.is_finite() && self.ref_frequency > 0.0) {
            return Err(Error::InvalidLattice("ref_frequency must be positive".into()));
        }
        let dim = self.dim();
        if dim > MAX_TOTAL_DIM {
            return Err(Error::DimensionOverflow { dim, limit: MAX_TOTAL_DIM });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.spec.n_sites as u32)
    }
}

/// Single-site operators. Squares and symmetrized products are projections
/// of products formed in a larger space, so they are exact on every kept
/// level.
#[derive(Debug, Clone)]
pub struct SiteOperators {
    pub phi: DMatrix<Complex64>,
    /// Canonical momentum `P = a π`.
    pub momentum: DMatrix<Complex64>,
    pub phi2: DMatrix<Complex64>,
    pub momentum2: DMatrix<Complex64>,
    /// `(φP + Pφ)/2`.
    pub phi_momentum: DMatrix<Complex64>,
}

fn ladder(dim: usize) -> DMatrix<Complex64> {
    let mut b = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        b[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    b
}

fn field_pair(dim: usize, spacing: f64, omega: f64) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let b = ladder(dim);
    let bd = b.adjoint();
    let q = (&b + &bd) * Complex64::new(1.0 / (2.0 * spacing * omega).sqrt(), 0.0);
    let p = (&bd - &b) * Complex64::new(0.0, (spacing * omega / 2.0).sqrt());
    (q, p)
}

impl SiteOperators {
    pub fn new(cutoff: usize, spacing: f64, ref_frequency: f64) -> Self {
        let big = cutoff + PRODUCT_PAD;
        let (q, p) = field_pair(big, spacing, ref_frequency);
        let cut = |m: DMatrix<Complex64>| m.view((0, 0), (cutoff, cutoff)).into_owned();
        let half = Complex64::new(0.5, 0.0);
        Self {
            phi2: cut(&q * &q),
            momentum2: cut(&p * &p),
            phi_momentum: cut((&q * &p + &p * &q) * half),
            phi: cut(q),
            momentum: cut(p),
        }
    }
}

/// Tensor-product bookkeeping for `n_sites` sites of dimension `cutoff`.
#[derive(Debug, Clone, Copy)]
pub struct ProductSpace {
    pub n_sites: usize,
    pub cutoff: usize,
}

impl ProductSpace {
    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.n_sites as u32)
    }

    fn stride(&self, site: usize) -> usize {
        self.cutoff.pow((self.n_sites - 1 - site) as u32)
    }

    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.stride(site)) % self.cutoff
    }

    /// `op` acting on `site`, identity elsewhere.
    pub fn apply_site(&self, op: &DMatrix<Complex64>, site: usize, v: &DVector<Complex64>) -> DVector<Complex64> {
        let stride = self.stride(site);
        let mut out = DVector::zeros(v.len());
        for (idx, &amp) in v.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            let digit = (idx / stride) % self.cutoff;
            let base = idx - digit * stride;
            for k in 0..self.cutoff {
                let z = op[(k, digit)];
                if z != ZERO {
                    out[base + k * stride] += z * amp;
                }
            }
        }
        out
    }

    /// Split an index into (label over `region` sites, index with those
    /// digits zeroed). Labels are lexicographic in the sorted region sites.
    fn split(&self, index: usize, region: &[usize]) -> (usize, usize) {
        let mut label = 0;
        let mut rest = index;
        for &s in region {
            let digit = self.digit(index, s);
            label = label * self.cutoff + digit;
            rest -= digit * self.stride(s);
        }
        (label, rest)
    }

    fn label_offset(&self, label: usize, region: &[usize]) -> usize {
        let mut idx = 0;
        let mut l = label;
        for &s in region.iter().rev() {
            idx += (l % self.cutoff) * self.stride(s);
            l /= self.cutoff;
        }
        idx
    }
}

/// Dense Hamiltonian in the truncated product basis.
pub fn build_hamiltonian(fl: &FockLattice) -> Result<DMatrix<f64>> {
    fl.validate()?;
    let dim = fl.dim();
    if dim > DENSE_LIMIT {
        return Err(Error::DimensionOverflow { dim, limit: DENSE_LIMIT });
    }
    let n = fl.spec.n_sites;
    let a = fl.spec.spacing;
    let d = fl.cutoff;
    let m2 = fl.spec.quadratic_form();
    let ops = SiteOperators::new(d, a, fl.ref_frequency);
    let space = ProductSpace { n_sites: n, cutoff: d };
    let onsite: Vec<DMatrix<f64>> = (0..n)
        .map(|x| (ops.momentum2.map(|z| z.re) / (2.0 * a)) + ops.phi2.map(|z| z.re) * (0.5 * a * m2[(x, x)]))
        .collect();
    let q = ops.phi.map(|z| z.re);
    let mut h = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let digits: Vec<usize> = (0..n).map(|s| space.digit(col, s)).collect();
        for x in 0..n {
            let sx = space.stride(x);
            let base = col - digits[x] * sx;
            for k in 0..d {
                let v = onsite[x][(k, digits[x])];
                if v != 0.0 {
                    h[(base + k * sx, col)] += v;
                }
            }
        }
        for x in 0..n {
            for y in (x + 1)..n {
                let c = a * m2[(x, y)];
                if c == 0.0 {
                    continue;
                }
                let (sx, sy) = (space.stride(x), space.stride(y));
                let base = col - digits[x] * sx - digits[y] * sy;
                for k in 0..d {
                    let qx = q[(k, digits[x])];
                    if qx == 0.0 {
                        continue;
                    }
                    for l in 0..d {
                        let qy = q[(l, digits[y])];
                        if qy != 0.0 {
                            h[(base + k * sx + l * sy, col)] += c * qx * qy;
                        }
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Diagonalized truncated chain.
#[derive(Debug, Clone)]
pub struct FockSystem {
    pub lattice: FockLattice,
    pub energies: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub ops: SiteOperators,
    space: ProductSpace,
}

/// A truncated coherent state and how much norm the truncation removed.
#[derive(Debug, Clone)]
pub struct CoherentVector {
    pub state: DVector<Complex64>,
    pub truncation_loss: f64,
    pub max_amplitude: f64,
    /// Set when some `|α_x|` exceeds [`AMPLITUDE_WARNING`].
    pub warning: Option<String>,
}

impl FockSystem {
    pub fn new(lattice: FockLattice) -> Result<Self> {
        let h = build_hamiltonian(&lattice)?;
        let (energies, eigenvectors) = linalg::eigh_real(&h)?;
        let ops = SiteOperators::new(lattice.cutoff, lattice.spec.spacing, lattice.ref_frequency);
        let space = ProductSpace { n_sites: lattice.spec.n_sites, cutoff: lattice.cutoff };
        Ok(Self { lattice, energies, eigenvectors, ops, space })
    }

    pub fn space(&self) -> ProductSpace {
        self.space
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn ground_state(&self) -> DVector<Complex64> {
        self.eigenvectors.column(0).map(|x| Complex64::new(x, 0.0))
    }

    /// `e^{-iHt} ψ`.
    pub fn evolve(&self, psi: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let v = &self.eigenvectors;
        let mut coeff = DVector::zeros(v.ncols());
        for k in 0..v.ncols() {
            let c: Complex64 = v.column(k).iter().zip(psi.iter()).map(|(a, b)| b * *a).sum();
            coeff[k] = c * Complex64::from_polar(1.0, -self.energies[k] * t);
        }
        let mut out = DVector::zeros(psi.len());
        for k in 0..v.ncols() {
            let c = coeff[k];
            for (o, a) in out.iter_mut().zip(v.column(k).iter()) {
                *o += c * *a;
            }
        }
        out
    }

    /// `e^{i a π_c·φ_c/2} W(φ_c, π_c)` applied to the truncated ground state,
    /// renormalized.
    pub fn coherent_state(&self, phi_class: &[f64], pi_class: &[f64]) -> Result<CoherentVector> {
        let n = self.lattice.spec.n_sites;
        for v in [phi_class, pi_class] {
            if v.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: v.len() });
            }
        }
        let a = self.lattice.spec.spacing;
        let w = self.lattice.ref_frequency;
        let mut psi = self.ground_state();
        let mut max_amplitude: f64 = 0.0;
        let mut phase = 0.0;
        for x in 0..n {
            let alpha = Complex64::new(phi_class[x] * (a * w / 2.0).sqrt(), a * pi_class[x] / (2.0 * a * w).sqrt());
            max_amplitude = max_amplitude.max(alpha.norm());
            phase += 0.5 * a * pi_class[x] * phi_class[x];
            if alpha != ZERO {
                let disp = displacement_matrix(alpha, self.lattice.cutoff)?;
                psi = self.space.apply_site(&disp, x, &psi);
            }
        }
        let norm = psi.norm();
        let truncation_loss = (1.0 - norm * norm).max(0.0);
        psi *= Complex64::from_polar(1.0 / norm, phase);
        let warning = (max_amplitude > AMPLITUDE_WARNING).then(|| {
            format!("coherent amplitude {max_amplitude:.3} exceeds {AMPLITUDE_WARNING}; truncation error may be large")
        });
        Ok(CoherentVector { state: psi, truncation_loss, max_amplitude, warning })
    }

    fn field_operator(&self, k: usize) -> (usize, DMatrix<Complex64>) {
        let n = self.lattice.spec.n_sites;
        if k < n {
            (k, self.ops.phi.clone())
        } else {
            (k - n, &self.ops.momentum / Complex64::new(self.lattice.spec.spacing, 0.0))
        }
    }

    fn same_site_second(&self, k: usize, l: usize) -> DMatrix<Complex64> {
        let n = self.lattice.spec.n_sites;
        let a = Complex64::new(self.lattice.spec.spacing, 0.0);
        match (k < n, l < n) {
            (true, true) => self.ops.phi2.clone(),
            (false, false) => &self.ops.momentum2 / (a * a),
            _ => &self.ops.phi_momentum / a,
        }
    }

    /// Mean and symmetrized covariance of `(φ, π)` for a normalized state.
    pub fn moments(&self, psi: &DVector<Complex64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.lattice.spec.n_sites;
        let applied: Vec<DVector<Complex64>> = (0..2 * n)
            .map(|k| {
                let (site, op) = self.field_operator(k);
                self.space.apply_site(&op, site, psi)
            })
            .collect();
        let mean = DVector::from_fn(2 * n, |k, _| psi.dotc(&applied[k]).re);
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..2 * n {
            for l in k..2 * n {
                let raw = if k % n == l % n {
                    let op = self.same_site_second(k, l);
                    psi.dotc(&self.space.apply_site(&op, k % n, psi)).re
                } else {
                    applied[k].dotc(&applied[l]).re
                };
                cov[(k, l)] = raw - mean[k] * mean[l];
                cov[(l, k)] = cov[(k, l)];
            }
        }
        (mean, cov)
    }
}

/// `exp(α b† − α* b)` built with extra levels and truncated to `cutoff`.
pub fn displacement_matrix(alpha: Complex64, cutoff: usize) -> Result<DMatrix<Complex64>> {
    let big = cutoff + DISPLACEMENT_PAD;
    let b = ladder(big);
    let gen = b.adjoint() * alpha - &b * alpha.conj();
    // gen is anti-Hermitian: gen = -i h with h Hermitian
    let h = &gen * Complex64::new(0.0, 1.0);
    let (vals, vecs) = linalg::eigh_hermitian(&h)?;
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        big,
        vals.iter().map(|&v| Complex64::from_polar(1.0, -v)),
    ));
    let full = &vecs * phases * vecs.adjoint();
    Ok(full.view((0, 0), (cutoff, cutoff)).into_owned())
}

/// `e^{-iHt} ψ` for a diagonalized system.
pub fn evolve_exact(system: &FockSystem, psi: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
    system.evolve(psi, t)
}

pub fn coherent_state_vector(system: &FockSystem, phi_class: &[f64], pi_class: &[f64]) -> Result<CoherentVector> {
    system.coherent_state(phi_class, pi_class)
}

fn check_region(fl: &FockLattice, region: &Region) -> Result<()> {
    if region.n_sites() != fl.spec.n_sites {
        return Err(Error::InvalidRegion(format!(
            "region on {} sites, oracle on {}",
            region.n_sites(),
            fl.spec.n_sites
        )));
    }
    Ok(())
}

/// Reduced density matrix on the sites of `keep`, tracing out the rest.
/// Keeping every site returns `rho` unchanged.
pub fn partial_trace(rho: &DMatrix<Complex64>, fl: &FockLattice, keep: &Region) -> Result<DMatrix<Complex64>> {
    check_region(fl, keep)?;
    let space = ProductSpace { n_sites: fl.spec.n_sites, cutoff: fl.cutoff };
    let dim = space.dim();
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::ShapeMismatch(format!("density matrix is {}x{}, basis has {dim}", rho.nrows(), rho.ncols())));
    }
    let kept = keep.sites();
    let traced = keep.complement();
    let dk = fl.cutoff.pow(kept.len() as u32);
    let dt = fl.cutoff.pow(traced.len() as u32);
    let offsets_k: Vec<usize> = (0..dk).map(|l| space.label_offset(l, kept)).collect();
    let offsets_t: Vec<usize> = (0..dt).map(|l| space.label_offset(l, traced.sites())).collect();
    Ok(DMatrix::from_fn(dk, dk, |i, j| {
        offsets_t.iter().map(|&t| rho[(offsets_k[i] + t, offsets_k[j] + t)]).sum()
    }))
}

/// Amplitudes `f(m, n)` with `m` labelling `region` and `n` its complement.
pub fn amplitude_matrix(psi: &DVector<Complex64>, fl: &FockLattice, region: &Region) -> Result<DMatrix<Complex64>> {
    check_region(fl, region)?;
    let space = ProductSpace { n_sites: fl.spec.n_sites, cutoff: fl.cutoff };
    let comp = region.complement();
    let rows = fl.cutoff.pow(region.len() as u32);
    let cols = fl.cutoff.pow(comp.len() as u32);
    let mut f = DMatrix::zeros(rows, cols);
    for (idx, &z) in psi.iter().enumerate() {
        let (m, _) = space.split(idx, region.sites());
        let (n, _) = space.split(idx, comp.sites());
        f[(m, n)] = z;
    }
    Ok(f)
}

/// Mean and covariance of `(φ, π)` on the kept sites from a reduced density
/// matrix whose basis is the lexicographic product over those sites.
pub fn density_moments(rho: &DMatrix<Complex64>, fl: &FockLattice, n_kept: usize) -> (DVector<f64>, DMatrix<f64>) {
    let space = ProductSpace { n_sites: n_kept, cutoff: fl.cutoff };
    let ops = SiteOperators::new(fl.cutoff, fl.spec.spacing, fl.ref_frequency);
    let a = Complex64::new(fl.spec.spacing, 0.0);
    let op = |k: usize| if k < n_kept { ops.phi.clone() } else { &ops.momentum / a };
    let apply_cols = |m: &DMatrix<Complex64>, o: &DMatrix<Complex64>, site: usize| {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for j in 0..m.ncols() {
            out.set_column(j, &space.apply_site(o, site, &m.column(j).into_owned()));
        }
        out
    };
    let r = 2 * n_kept;
    let applied: Vec<DMatrix<Complex64>> = (0..r).map(|k| apply_cols(rho, &op(k), k % n_kept)).collect();
    let mean = DVector::from_fn(r, |k, _| applied[k].trace().re);
    let mut cov = DMatrix::zeros(r, r);
    for k in 0..r {
        for l in k..r {
            let raw = if k % n_kept == l % n_kept {
                let o = match (k < n_kept, l < n_kept) {
                    (true, true) => ops.phi2.clone(),
                    (false, false) => &ops.momentum2 / (a * a),
                    _ => &ops.phi_momentum / a,
                };
                apply_cols(rho, &o, k % n_kept).trace().re
            } else {
                apply_cols(&applied[l], &op(k), k % n_kept).trace().re
            };
            cov[(k, l)] = raw - mean[k] * mean[l];
            cov[(l, k)] = cov[(k, l)];
        }
    }
    (mean, cov)
}

/// One oracle-versus-engine number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub quantity: String,
    pub oracle_value: f64,
    pub engine_value: f64,
    pub cutoff: usize,
    pub residual: f64,
}

/// Max deviation of evolved first and second moments between the oracle and
/// the Gaussian engine for a coherent initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentComparison {
    pub cutoff: usize,
    pub times: Vec<f64>,
    pub first_residual: f64,
    pub second_residual: f64,
    pub truncation_loss: f64,
    pub records: Vec<ComparisonRecord>,
}

impl MomentComparison {
    pub fn residual(&self) -> f64 {
        self.first_residual.max(self.second_residual)
    }
}

pub fn compare_moments(fl: &FockLattice, phi_class: &[f64], pi_class: &[f64], times: &[f64]) -> Result<MomentComparison> {
    let system = FockSystem::new(fl.clone())?;
    compare_moments_with(&system, phi_class, pi_class, times)
}

pub fn compare_moments_with(
    system: &FockSystem,
    phi_class: &[f64],
    pi_class: &[f64],
    times: &[f64],
) -> Result<MomentComparison> {
    let spec = system.lattice.spec;
    let start = system.coherent_state(phi_class, pi_class)?;
    let engine0 = gaussian::coherent(&spec, phi_class, pi_class)?;
    let (mut first_residual, mut second_residual) = (0.0f64, 0.0f64);
    let mut records = Vec::new();
    for &t in times {
        let psi = system.evolve(&start.state, t);
        let (mean, cov) = system.moments(&psi);
        let engine = gaussian::evolve(&engine0, t)?;
        let dm = (&mean - &engine.mean).amax();
        let dc = (&cov - &engine.covariance).amax();
        first_residual = first_residual.max(dm);
        second_residual = second_residual.max(dc);
        records.push(ComparisonRecord {
            quantity: format!("phi_0(t={t})"),
            oracle_value: mean[0],
            engine_value: engine.mean[0],
            cutoff: system.lattice.cutoff,
            residual: (mean[0] - engine.mean[0]).abs(),
        });
        records.push(ComparisonRecord {
            quantity: format!("phi_0 phi_0 covariance (t={t})"),
            oracle_value: cov[(0, 0)],
            engine_value: engine.covariance[(0, 0)],
            cutoff: system.lattice.cutoff,
            residual: (cov[(0, 0)] - engine.covariance[(0, 0)]).abs(),
        });
    }
    Ok(MomentComparison {
        cutoff: system.lattice.cutoff,
        times: times.to_vec(),
        first_residual,
        second_residual,
        truncation_loss: start.truncation_loss,
        records,
    })
}

/// Vacuum witness of the equal-weight cat `|ξ⟩ + |−ξ⟩` on `region`, computed
/// in the truncated basis.
pub fn cat_witness(system: &FockSystem, phi_class: &[f64], pi_class: &[f64], region: &Region) -> Result<f64> {
    check_region(&system.lattice, region)?;
    let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
    let plus = system.coherent_state(phi_class, pi_class)?;
    let minus = system.coherent_state(&neg(phi_class), &neg(pi_class))?;
    let mut cat = plus.state + minus.state;
    let norm = cat.norm();
    cat /= Complex64::new(norm, 0.0);
    let (mean, cov) = system.moments(&cat);
    let (_, vac_cov) = system.moments(&system.ground_state());
    let idx = region.phase_space_indices();
    let mut w: f64 = 0.0;
    for &i in &idx {
        w = w.max(mean[i].abs());
        for &j in &idx {
            w = w.max((cov[(i, j)] - vac_cov[(i, j)]).abs());
        }
    }
    Ok(w)
}

/// Oracle and engine cat witnesses side by side.
pub fn compare_cat_witness(fl: &FockLattice, phi_class: &[f64], pi_class: &[f64], region: &Region) -> Result<ComparisonRecord> {
    let system = FockSystem::new(fl.clone())?;
    let oracle_value = cat_witness(&system, phi_class, pi_class, region)?;
    let sup = superposition::CoherentSuperposition::cat(fl.spec, phi_class.to_vec(), pi_class.to_vec())?;
    let engine_value = superposition::vacuum_witness(&sup, region)?;
    Ok(ComparisonRecord {
        quantity: "cat_vacuum_witness".into(),
        oracle_value,
        engine_value,
        cutoff: fl.cutoff,
        residual: (oracle_value - engine_value).abs() / engine_value.abs().max(f64::MIN_POSITIVE),
    })
}

/// Position-grid setup for the single-oscillator propagator check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalizationConfig {
    /// Grid covers `[-half_width, half_width]`.
    pub grid_half_width: f64,
    pub grid_step: f64,
    /// Width `σ` of the Gaussian packets `|g|² ∝ exp(-(φ-c)²/(2σ²))`.
    pub packet_width: f64,
    pub packet_centers: Vec<f64>,
    /// Comparison window `|φ| ≤ window`.
    pub window: f64,
    /// Times as fractions of the first caustic `π/ω`.
    pub t_fractions: Vec<f64>,
    pub reference_fraction: f64,
    /// Fraction of `π/ω` for the delta-limit probe.
    pub small_t_fraction: f64,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            grid_half_width: 20.0,
            grid_step: 0.05,
            packet_width: 0.3,
            packet_centers: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            window: 2.0,
            t_fractions: (0..=16).map(|k| 0.1 + 0.05 * k as f64).collect(),
            reference_fraction: 0.5,
            small_t_fraction: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    pub omega: f64,
    pub times: Vec<f64>,
    /// `|N(t)| / |N(t_ref)|` fitted from grid evolution.
    pub oracle_modulus: Vec<f64>,
    /// `exp(-½ a ∫_{t_ref}^t G_xx)` by quadrature of the kernel.
    pub formula_modulus: Vec<f64>,
    /// Max relative deviation of the two modulus curves.
    pub modulus_deviation: f64,
    /// Max deviation of `N(t) e^{iS}` applied to the packets against grid
    /// evolution, relative to each packet's peak, after matching the
    /// complex constant at `t_ref`.
    pub propagator_deviation: f64,
    /// Complex constant `N(t_ref)` fitted from the grid, as `[re, im]`.
    pub matched_constant: [f64; 2],
    /// `√(a ω / (2π i sin ω t_ref))`, as `[re, im]`.
    pub closed_form_constant: [f64; 2],
    /// Relative deviation between the fitted and closed-form constants.
    pub constant_deviation: f64,
    /// Deviation from the initial packet of the closed-form propagator
    /// applied at a small time, relative to the packet peak.
    pub delta_limit_deviation: f64,
}

fn packet(phi: f64, center: f64, width: f64) -> f64 {
    (2.0 * PI * width * width).powf(-0.25) * (-(phi - center).powi(2) / (4.0 * width * width)).exp()
}

/// `∫ exp(i[½A(φ² + φ₁²) − Bφφ₁]) g(φ₁) dφ₁` in closed form for a Gaussian packet.
fn propagated_packet(phi: f64, center: f64, width: f64, big_a: f64, big_b: f64) -> Complex64 {
    let s2 = width * width;
    let alpha = Complex64::new(1.0 / (4.0 * s2), -0.5 * big_a);
    let beta = Complex64::new(center / (2.0 * s2), -big_b * phi);
    let gamma = -center * center / (4.0 * s2);
    let norm0 = (2.0 * PI * s2).powf(-0.25);
    let gauss = (Complex64::new(PI, 0.0) / alpha).sqrt() * (beta * beta / (alpha * 4.0) + gamma).exp();
    Complex64::from_polar(norm0, 0.5 * big_a * phi * phi) * gauss
}

/// Composite Simpson rule.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for k in 1..n {
        acc += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Compare the single-oscillator propagator `N(t) e^{iS(φ, φ₁; t)}` built
/// from the kernels against dense evolution on a sinc position grid.
pub fn normalization_check(spec: &LatticeSpec, config: &NormalizationConfig) -> Result<NormalizationReport> {
    spec.validate()?;
    if spec.n_sites != 1 {
        return Err(Error::InvalidLattice("normalization check needs a single site".into()));
    }
    let omega2 = spec.quadratic_form()[(0, 0)];
    if omega2 <= 0.0 {
        return Err(Error::MasslessVacuum);
    }
    let omega = omega2.sqrt();
    let a = spec.spacing;
    let half_period = PI / omega;
    for &f in config.t_fractions.iter().chain([&config.reference_fraction, &config.small_t_fraction]) {
        if !(f > 0.0 && f < 1.0) {
            let t = f * half_period;
            return Err(Error::Caustic { t, mode: 0, sin_value: (omega * t).sin() });
        }
    }

    // sinc grid, kinetic term for mass a
    let points = (2.0 * config.grid_half_width / config.grid_step).round() as i64;
    let grid: Vec<f64> = (0..=points).map(|i| -config.grid_half_width + i as f64 * config.grid_step).collect();
    let m = grid.len();
    let h = config.grid_step;
    let tscale = 1.0 / (2.0 * a * h * h);
    let ham = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            tscale * PI * PI / 3.0 + 0.5 * a * omega2 * grid[i] * grid[i]
        } else {
            let d = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            tscale * 2.0 * sign / (d * d)
        }
    });
    let (energies, vecs) = linalg::eigh_real(&ham)?;
    let window: Vec<usize> = (0..m).filter(|&i| grid[i].abs() <= config.window + 1e-12).collect();

    let initial: Vec<DVector<f64>> = config
        .packet_centers
        .iter()
        .map(|&c| vecs.transpose() * DVector::from_fn(m, |i, _| h.sqrt() * packet(grid[i], c, config.packet_width)))
        .collect();
    // packet values on the window after evolving for t
    let evolve = |t: f64| -> Vec<Vec<Complex64>> {
        initial
            .iter()
            .map(|c0| {
                let phased: Vec<Complex64> =
                    c0.iter().zip(&energies).map(|(c, e)| Complex64::from_polar(*c, -e * t)).collect();
                window
                    .iter()
                    .map(|&i| {
                        let s: Complex64 = phased.iter().enumerate().map(|(k, z)| z * vecs[(i, k)]).sum();
                        s / h.sqrt()
                    })
                    .collect()
            })
            .collect()
    };
    let unit_kernels = |t: f64| -> Result<(f64, f64)> {
        let big_g = build_kernel(spec, KernelRole::BigG, t)?.get(0, 0);
        let small_g = build_kernel(spec, KernelRole::SmallG, t)?.get(0, 0);
        Ok((a * a * big_g, a * a * small_g))
    };
    let formula_packets = |t: f64| -> Result<Vec<Vec<Complex64>>> {
        let (big_a, big_b) = unit_kernels(t)?;
        Ok(config
            .packet_centers
            .iter()
            .map(|&c| window.iter().map(|&i| propagated_packet(grid[i], c, config.packet_width, big_a, big_b)).collect())
            .collect())
    };
    let fit = |grid_vals: &[Vec<Complex64>], formula: &[Vec<Complex64>]| {
        let mut num = ZERO;
        let mut den = 0.0;
        for (g, f) in grid_vals.iter().zip(formula) {
            for (x, y) in g.iter().zip(f) {
                num += y.conj() * x;
                den += y.norm_sqr();
            }
        }
        num / den
    };

    let t_ref = config.reference_fraction * half_period;
    let ref_grid = evolve(t_ref);
    let ref_formula = formula_packets(t_ref)?;
    let matched = fit(&ref_grid, &ref_formula);

    let mut times = Vec::new();
    let mut oracle_modulus = Vec::new();
    let mut formula_modulus = Vec::new();
    let mut modulus_deviation: f64 = 0.0;
    let mut propagator_deviation: f64 = 0.0;
    for &f in &config.t_fractions {
        let t = f * half_period;
        let log_n = simpson(
            |s| build_kernel(spec, KernelRole::BigG, s).map(|k| -0.5 * a * k.get(0, 0)).unwrap_or(f64::NAN),
            t_ref,
            t,
            400,
        );
        let n_formula = log_n.exp();
        let grid_vals = evolve(t);
        let formula = formula_packets(t)?;
        let n_oracle = fit(&grid_vals, &formula);
        let om = n_oracle.norm() / matched.norm();
        modulus_deviation = modulus_deviation.max((om - n_formula).abs() / n_formula);
        for (g, fv) in grid_vals.iter().zip(&formula) {
            let peak = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for (x, y) in g.iter().zip(fv) {
                propagator_deviation = propagator_deviation.max((x - matched * n_formula * y).norm() / peak);
            }
        }
        times.push(t);
        oracle_modulus.push(om);
        formula_modulus.push(n_formula);
    }

    let closed = |t: f64| (Complex64::new(a * omega / (2.0 * PI * (omega * t).sin()), 0.0) / Complex64::new(0.0, 1.0)).sqrt();
    let closed_ref = closed(t_ref);
    let constant_deviation = (matched - closed_ref).norm() / closed_ref.norm();

    let t_small = config.small_t_fraction * half_period;
    let (big_a, big_b) = unit_kernels(t_small)?;
    let n_small = closed(t_small);
    let mut delta_limit_deviation: f64 = 0.0;
    for &c in &config.packet_centers {
        let peak = packet(c, c, config.packet_width);
        for &i in &window {
            let prop = n_small * propagated_packet(grid[i], c, config.packet_width, big_a, big_b);
            let dev = (prop - packet(grid[i], c, config.packet_width)).norm() / peak;
            delta_limit_deviation = delta_limit_deviation.max(dev);
        }
    }

    Ok(NormalizationReport {
        omega,
        times,
        oracle_modulus,
        formula_modulus,
        modulus_deviation,
        propagator_deviation,
        matched_constant: [matched.re, matched.im],
        closed_form_constant: [closed_ref.re, closed_ref.im],
        constant_deviation,
        delta_limit_deviation,
    })
}
