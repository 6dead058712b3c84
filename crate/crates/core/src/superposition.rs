//! Finite superpositions of coherent states and regional moment witnesses.
//!
//! A branch `(φ_c, π_c)` is the state with wavefunctional
//! `e^{i a π_c·φ} Ψ₀(φ − φ_c)`: the displaced vacuum times a plane-wave phase.
//! In operator form `|ξ⟩ = e^{i a π_c·φ_c / 2} W(ξ) |Ω⟩` with the Weyl operator
//! `W(ξ) = exp(i a (π_c·φ̂ − φ_c·π̂))`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{self, GaussianState};
use crate::lattice::LatticeSpec;
use crate::region::Region;

/// A regional branch must match the vacuum to this accuracy before a witness
/// is computed.
pub const BRANCH_EQUIVALENCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub re: f64,
    pub im: f64,
    pub phi_class: Vec<f64>,
    pub pi_class: Vec<f64>,
}

impl Branch {
    pub fn new(amplitude: Complex64, phi_class: Vec<f64>, pi_class: Vec<f64>) -> Self {
        Self { re: amplitude.re, im: amplitude.im, phi_class, pi_class }
    }

    pub fn amplitude(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    fn phase_point(&self) -> DVector<f64> {
        DVector::from_iterator(self.phi_class.len() * 2, self.phi_class.iter().chain(&self.pi_class).copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SuperpositionRepr", into = "SuperpositionRepr")]
pub struct CoherentSuperposition {
    spec: LatticeSpec,
    branches: Vec<Branch>,
    norm: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuperpositionRepr {
    spec: LatticeSpec,
    branches: Vec<Branch>,
}

impl TryFrom<SuperpositionRepr> for CoherentSuperposition {
    type Error = Error;
    fn try_from(r: SuperpositionRepr) -> Result<Self> {
        CoherentSuperposition::new(r.spec, r.branches)
    }
}

impl From<CoherentSuperposition> for SuperpositionRepr {
    fn from(s: CoherentSuperposition) -> Self {
        SuperpositionRepr { spec: s.spec, branches: s.branches }
    }
}

impl CoherentSuperposition {
    pub fn new(spec: LatticeSpec, branches: Vec<Branch>) -> Result<Self> {
        spec.validate()?;
        if branches.is_empty() {
            return Err(Error::Precondition("superposition needs at least one branch".into()));
        }
        for b in &branches {
            for v in [&b.phi_class, &b.pi_class] {
                if v.len() != spec.n_sites {
                    return Err(Error::LengthMismatch { expected: spec.n_sites, got: v.len() });
                }
            }
        }
        let mut sup = Self { spec, branches, norm: 1.0 };
        let cov = gaussian::vacuum(&spec)?.covariance;
        let gram = gram_with(&sup, &cov);
        let amps: Vec<Complex64> = sup.branches.iter().map(Branch::amplitude).collect();
        let mut norm2 = Complex64::new(0.0, 0.0);
        for (i, ci) in amps.iter().enumerate() {
            for (j, cj) in amps.iter().enumerate() {
                norm2 += ci.conj() * cj * gram[(i, j)];
            }
        }
        if !(norm2.re > 0.0) || norm2.im.abs() > 1e-10 * norm2.re.max(1.0) {
            return Err(Error::Precondition(format!("superposition norm² = {norm2} is not positive")));
        }
        sup.norm = norm2.re.sqrt();
        Ok(sup)
    }

    /// Equal-weight `(|ξ⟩ + |−ξ⟩)` with `ξ = (phi_class, pi_class)`.
    pub fn cat(spec: LatticeSpec, phi_class: Vec<f64>, pi_class: Vec<f64>) -> Result<Self> {
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let b2 = Branch::new(w, neg(&phi_class), neg(&pi_class));
        Self::new(spec, vec![Branch::new(w, phi_class, pi_class), b2])
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// `‖Σ c_i |ξ_i⟩‖`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// `⟨ξ_i|ξ_j⟩` for all branch pairs.
    pub fn gram(&self) -> Result<DMatrix<Complex64>> {
        let cov = gaussian::vacuum(&self.spec)?.covariance;
        Ok(gram_with(self, &cov))
    }

    pub fn branch_state(&self, index: usize) -> Result<GaussianState> {
        let b = &self.branches[index];
        gaussian::coherent(&self.spec, &b.phi_class, &b.pi_class)
    }
}

fn gram_with(sup: &CoherentSuperposition, cov: &DMatrix<f64>) -> DMatrix<Complex64> {
    let pts: Vec<DVector<f64>> = sup.branches.iter().map(Branch::phase_point).collect();
    let a = sup.spec.spacing;
    DMatrix::from_fn(pts.len(), pts.len(), |i, j| pair(cov, a, &pts[i], &pts[j]).overlap)
}

/// Overlap of two branches plus the complex shift `u` that turns vacuum
/// moments into the transition moments `⟨ξ_i|R|ξ_j⟩ / ⟨ξ_i|ξ_j⟩ = ξ_i + u`.
struct PairTerms {
    overlap: Complex64,
    shift: Vec<Complex64>,
}

fn pair(cov: &DMatrix<f64>, a: f64, xi: &DVector<f64>, xj: &DVector<f64>) -> PairTerms {
    let n = xi.len() / 2;
    let (pi_i, pi_j) = (xi.rows(n, n), xj.rows(n, n));
    let (phi_i, phi_j) = (xi.rows(0, n), xj.rows(0, n));
    let theta =
        0.5 * a * (pi_j.dot(&phi_j) - pi_i.dot(&phi_i) + phi_i.dot(&pi_j) - pi_i.dot(&phi_j));
    let delta = xj - xi;
    let mut ell = DVector::zeros(2 * n);
    for x in 0..n {
        ell[x] = a * delta[n + x];
        ell[n + x] = -a * delta[x];
    }
    let s_ell = cov * &ell;
    let chi = (-0.5 * ell.dot(&s_ell)).exp();
    let overlap = Complex64::from_polar(chi, theta);
    let shift = (0..2 * n).map(|k| Complex64::new(0.5 * delta[k], s_ell[k])).collect();
    PairTerms { overlap, shift }
}

fn branch_from(spec: &LatticeSpec, phi: &[f64], pi: &[f64]) -> Result<DVector<f64>> {
    for v in [phi, pi] {
        if v.len() != spec.n_sites {
            return Err(Error::LengthMismatch { expected: spec.n_sites, got: v.len() });
        }
    }
    Ok(DVector::from_iterator(2 * spec.n_sites, phi.iter().chain(pi).copied()))
}

/// `⟨ξ_i|ξ_j⟩` between two coherent branches.
pub fn overlap(spec: &LatticeSpec, branch_i: (&[f64], &[f64]), branch_j: (&[f64], &[f64])) -> Result<Complex64> {
    let cov = gaussian::vacuum(spec)?.covariance;
    let xi = branch_from(spec, branch_i.0, branch_i.1)?;
    let xj = branch_from(spec, branch_j.0, branch_j.1)?;
    Ok(pair(&cov, spec.spacing, &xi, &xj).overlap)
}

/// Regional first moments `(⟨φ_R⟩, ⟨π_R⟩)` and symmetrized central second
/// moments of the normalized superposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMoments {
    pub region: Region,
    pub first: Vec<f64>,
    #[serde(with = "crate::io::row_major")]
    pub second: DMatrix<f64>,
}

pub fn local_moments(sup: &CoherentSuperposition, region: &Region) -> Result<LocalMoments> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if region.n_sites() != sup.spec.n_sites {
        return Err(Error::InvalidRegion(format!(
            "region on {} sites, state on {}",
            region.n_sites(),
            sup.spec.n_sites
        )));
    }
    let cov = gaussian::vacuum(&sup.spec)?.covariance;
    let idx = region.phase_space_indices();
    let r = idx.len();
    let pts: Vec<DVector<f64>> = sup.branches.iter().map(Branch::phase_point).collect();
    let amps: Vec<Complex64> = sup.branches.iter().map(Branch::amplitude).collect();
    let norm2 = sup.norm * sup.norm;

    let mut first = vec![Complex64::new(0.0, 0.0); r];
    let mut raw = DMatrix::<Complex64>::zeros(r, r);
    for (i, xi) in pts.iter().enumerate() {
        for (j, xj) in pts.iter().enumerate() {
            let terms = pair(&cov, sup.spec.spacing, xi, xj);
            let w = amps[i].conj() * amps[j] * terms.overlap / norm2;
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            let shifted: Vec<Complex64> = idx.iter().map(|&k| xi[k] + terms.shift[k]).collect();
            for p in 0..r {
                first[p] += w * shifted[p];
                for q in 0..r {
                    raw[(p, q)] += w * (shifted[p] * shifted[q] + cov[(idx[p], idx[q])]);
                }
            }
        }
    }
    let first: Vec<f64> = first.iter().map(|z| z.re).collect();
    let second = DMatrix::from_fn(r, r, |p, q| {
        0.5 * (raw[(p, q)].re + raw[(q, p)].re) - first[p] * first[q]
    });
    Ok(LocalMoments { region: region.clone(), first, second })
}

/// Max-norm deviation of the regional moments from the vacuum's.
///
/// Every branch must individually look like the vacuum on `region`.
pub fn vacuum_witness(sup: &CoherentSuperposition, region: &Region) -> Result<f64> {
    let moments = local_moments(sup, region)?;
    let vac = gaussian::restrict(&gaussian::vacuum(&sup.spec)?, region)?;
    for (k, b) in sup.branches.iter().enumerate() {
        let deviation = region
            .sites()
            .iter()
            .flat_map(|&x| [b.phi_class[x], b.pi_class[x]])
            .fold(0.0, |m: f64, v| m.max(v.abs()));
        if deviation > BRANCH_EQUIVALENCE_TOLERANCE {
            return Err(Error::BranchNotVacuumEquivalent { branch: k, deviation });
        }
    }
    let dm = moments.first.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok(dm.max((&moments.second - &vac.cov_block).amax()))
}

/// Smallest eigenvalue of the Hermitian branch Gram matrix.
pub fn gram_min_eigenvalue(gram: &DMatrix<Complex64>) -> f64 {
    let herm = (gram + gram.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}
