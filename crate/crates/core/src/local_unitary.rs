//! Unitary completion for bipartite amplitude matrices.
//!
//! A pure state `Σ f(m, n) |a_m⟩|A_n⟩` has `A`-reduced state determined by the
//! Gram matrix `f†f`. When two amplitude matrices share that Gram matrix
//! there is a unitary `U` on the `a` factor with `f₂ = U f₁`; this module
//! constructs it.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs};
use crate::region::Region;

/// Complex `M × N` matrix of amplitudes, rows indexed by the `a` basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AmplitudeRepr", into = "AmplitudeRepr")]
pub struct AmplitudeMatrix {
    entries: DMatrix<Complex64>,
}

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct AmplitudeRepr(#[serde(with = "crate::io::complex_rows")] DMatrix<Complex64>);

impl TryFrom<AmplitudeRepr> for AmplitudeMatrix {
    type Error = Error;
    fn try_from(r: AmplitudeRepr) -> Result<Self> {
        AmplitudeMatrix::new(r.0)
    }
}

impl From<AmplitudeMatrix> for AmplitudeRepr {
    fn from(a: AmplitudeMatrix) -> Self {
        AmplitudeRepr(a.entries)
    }
}

impl AmplitudeMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::ShapeMismatch("amplitude matrix needs at least one row and column".into()));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::ShapeMismatch("amplitude matrix has non-finite entries".into()));
        }
        Ok(Self { entries })
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::LengthMismatch { expected: rows * cols, got: values.len() });
        }
        Self::new(DMatrix::from_row_iterator(rows, cols, values.iter().map(|&v| Complex64::new(v, 0.0))))
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn gram(&self) -> DMatrix<Complex64> {
        self.entries.adjoint() * &self.entries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdmCheck {
    pub equal: bool,
    pub residual: f64,
}

fn check_shapes(f1: &AmplitudeMatrix, f2: &AmplitudeMatrix) -> Result<()> {
    if f1.rows() != f2.rows() || f1.cols() != f2.cols() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            f1.rows(),
            f1.cols(),
            f2.rows(),
            f2.cols()
        )));
    }
    Ok(())
}

/// `‖f₁†f₁ − f₂†f₂‖_max` against `tol`.
pub fn check_rdm_equal(f1: &AmplitudeMatrix, f2: &AmplitudeMatrix, tol: f64) -> Result<RdmCheck> {
    check_shapes(f1, f2)?;
    let residual = max_abs(&(f1.gram() - f2.gram()));
    Ok(RdmCheck { equal: residual <= tol, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletionPath {
    FullRankSquare,
    FullRankRectangular,
    RankDeficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalUnitary {
    #[serde(with = "crate::io::complex_rows")]
    pub unitary: DMatrix<Complex64>,
    pub rank: usize,
    pub path: CompletionPath,
    /// `‖U†U − I‖_max`.
    pub residual_unitarity: f64,
    /// `‖f₂ − U f₁‖_max`.
    pub residual_equation: f64,
    /// Gram mismatch of the extended matrices (zero on full-rank paths).
    pub extension_residual: f64,
}

/// Numerical rank with singular values below `tol · σ_max` treated as zero.
/// Values inside `[tol/10, 10 tol] · σ_max` are rejected as ambiguous.
pub fn numerical_rank(f: &DMatrix<Complex64>, tol: f64) -> Result<usize> {
    let sv = linalg::singular_values(f)?;
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    let (low, high) = (0.1 * tol * smax, 10.0 * tol * smax);
    if let Some(&s) = sv.iter().find(|&&s| s >= low && s <= high) {
        return Err(Error::RankInstability { singular_value: s, low, high });
    }
    Ok(sv.iter().filter(|&&s| s > tol * smax).count())
}

/// Construct `U` with `f₂ = U f₁` from equal Gram matrices.
pub fn find_local_unitary(f1: &AmplitudeMatrix, f2: &AmplitudeMatrix, tol: f64) -> Result<LocalUnitary> {
    find_local_unitary_gauged(f1, f2, tol, None)
}

/// As [`find_local_unitary`], with the extension columns of `f₂` rotated by
/// `gauge` (an `(M−k) × (M−k)` unitary) on the rank-deficient path.
pub fn find_local_unitary_gauged(
    f1: &AmplitudeMatrix,
    f2: &AmplitudeMatrix,
    tol: f64,
    gauge: Option<&DMatrix<Complex64>>,
) -> Result<LocalUnitary> {
    let check = check_rdm_equal(f1, f2, tol)?;
    if !check.equal {
        return Err(Error::RdmMismatch { residual: check.residual, tolerance: tol });
    }
    let m = f1.rows();
    let n = f1.cols();
    let k1 = numerical_rank(f1.entries(), tol)?;
    let k2 = numerical_rank(f2.entries(), tol)?;
    if k1 != k2 {
        return Err(Error::RdmMismatch { residual: check.residual, tolerance: tol });
    }
    let k = k1;

    let (e1, e2, path) = if k == m {
        let path = if m == n { CompletionPath::FullRankSquare } else { CompletionPath::FullRankRectangular };
        (f1.entries().clone(), f2.entries().clone(), path)
    } else {
        let ext1 = complement_basis(f1.entries(), m - k)?;
        let mut ext2 = complement_basis(f2.entries(), m - k)?;
        if let Some(g) = gauge {
            if g.nrows() != m - k || g.ncols() != m - k {
                return Err(Error::ShapeMismatch(format!("gauge must be {0}x{0}", m - k)));
            }
            ext2 *= g;
        }
        (hstack(f1.entries(), &ext1), hstack(f2.entries(), &ext2), CompletionPath::RankDeficient)
    };
    let extension_residual = max_abs(&(e1.adjoint() * &e1 - e2.adjoint() * &e2));

    let pivots = pivot_columns(&e2, m);
    let big1 = e1.select_columns(&pivots);
    let big2 = e2.select_columns(&pivots);
    // F₂† U = F₁†
    let raw = big2
        .adjoint()
        .lu()
        .solve(&big1.adjoint())
        .ok_or(Error::RankInstability { singular_value: 0.0, low: 0.0, high: tol })?;
    let unitary = linalg::polar_unitary(&raw)?;

    let residual_unitarity = max_abs(&(unitary.adjoint() * &unitary - DMatrix::identity(m, m)));
    let residual_equation = max_abs(&(f2.entries() - &unitary * f1.entries()));
    Ok(LocalUnitary { unitary, rank: k, path, residual_unitarity, residual_equation, extension_residual })
}

fn hstack(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

/// `count` orthonormal columns spanning the orthogonal complement of the
/// column space of `f`: the top eigenvectors of `I − P`, with `P` the
/// projector from the leading left singular vectors.
fn complement_basis(f: &DMatrix<Complex64>, count: usize) -> Result<DMatrix<Complex64>> {
    let m = f.nrows();
    let k = m - count;
    let svd = linalg::svd(f)?;
    let lead = svd.u.columns(0, k);
    let proj = DMatrix::<Complex64>::identity(m, m) - lead * lead.adjoint();
    let eig = SymmetricEigen::new(proj);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    Ok(eig.eigenvectors.select_columns(&idx[..count]))
}

/// Greedy pivoted Gram–Schmidt: indices of `count` columns of `f`, each
/// chosen with the largest norm orthogonal to the ones already picked.
fn pivot_columns(f: &DMatrix<Complex64>, count: usize) -> Vec<usize> {
    let mut work = f.clone();
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count {
        let (best, norm) = (0..work.ncols())
            .filter(|j| !picked.contains(j))
            .map(|j| (j, work.column(j).norm()))
            .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        picked.push(best);
        let q = work.column(best) / Complex64::new(norm, 0.0);
        for j in 0..work.ncols() {
            let coeff = q.dotc(&work.column(j));
            let update = &q * coeff;
            let mut col = work.column_mut(j);
            col -= update;
        }
    }
    picked
}

/// Embed `U` acting on the sites of `region` into the full truncated product
/// basis (site 0 most significant, `cutoff` levels per site). The region's
/// own basis is lexicographic in its sorted sites.
pub fn embed_in_fock(u: &DMatrix<Complex64>, cutoff: usize, region: &Region) -> Result<DMatrix<Complex64>> {
    let n_sites = region.n_sites();
    let r = region.len();
    let region_dim = checked_pow(cutoff, r)?;
    if u.nrows() != region_dim || u.ncols() != region_dim {
        return Err(Error::ShapeMismatch(format!(
            "unitary is {}x{}, region basis has dimension {region_dim}",
            u.nrows(),
            u.ncols()
        )));
    }
    let dim = checked_pow(cutoff, n_sites)?;
    let strides: Vec<usize> = (0..n_sites).map(|s| cutoff.pow((n_sites - 1 - s) as u32)).collect();
    // split each full index into (region label, index with region digits zeroed)
    let split = |idx: usize| {
        let mut label = 0;
        let mut rest = idx;
        for &s in region.sites() {
            let digit = (idx / strides[s]) % cutoff;
            label = label * cutoff + digit;
            rest -= digit * strides[s];
        }
        (label, rest)
    };
    let compose = |label: usize, rest: usize| {
        let mut idx = rest;
        let mut l = label;
        for &s in region.sites().iter().rev() {
            idx += (l % cutoff) * strides[s];
            l /= cutoff;
        }
        idx
    };
    let mut out = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let (lc, rest) = split(col);
        for lr in 0..region_dim {
            let z = u[(lr, lc)];
            if z != Complex64::new(0.0, 0.0) {
                out[(compose(lr, rest), col)] = z;
            }
        }
    }
    Ok(out)
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    const LIMIT: usize = 1 << 14;
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base).filter(|&v| v <= LIMIT).ok_or(Error::DimensionOverflow {
            dim: base.saturating_pow(exp as u32),
            limit: LIMIT,
        })?;
    }
    Ok(acc)
}

/// Random `dim × dim` unitary from the QR factor of a complex matrix with
/// uniform entries.
pub fn random_unitary<R: rand::Rng>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    z.qr().q()
}

/// Random `rows × cols` matrix of rank exactly `rank` (almost surely).
pub fn random_amplitudes<R: rand::Rng>(rows: usize, cols: usize, rank: usize, rng: &mut R) -> DMatrix<Complex64> {
    let mut draw = |r, c| DMatrix::from_fn(r, c, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    draw(rows, rank) * draw(rank, cols)
}
