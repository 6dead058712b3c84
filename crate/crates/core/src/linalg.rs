//! Dense decompositions that need more care than nalgebra's SVD provides.
//!
//! nalgebra's SVD returns inaccurate factors for rank-deficient inputs, which
//! are routine in unitary completion, so singular value decompositions go
//! through faer.

use faer::Mat;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Thin SVD `a = U diag(σ) Vᴴ` with `σ` non-increasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<Complex64>,
    pub singular_values: Vec<f64>,
    pub v_adjoint: DMatrix<Complex64>,
}

fn to_faer(a: &DMatrix<Complex64>) -> Mat<Complex64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

pub fn svd(a: &DMatrix<Complex64>) -> Result<Svd> {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Ok(Svd { u: DMatrix::zeros(m, 0), singular_values: vec![], v_adjoint: DMatrix::zeros(0, n) });
    }
    let dec = to_faer(a)
        .thin_svd()
        .map_err(|e| Error::Precondition(format!("singular value decomposition failed: {e:?}")))?;
    let (fu, fs, fv) = (dec.U(), dec.S().column_vector(), dec.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| fs[j].re.total_cmp(&fs[i].re));
    Ok(Svd {
        u: DMatrix::from_fn(m, k, |i, c| fu[(i, order[c])]),
        singular_values: order.iter().map(|&c| fs[c].re).collect(),
        v_adjoint: DMatrix::from_fn(k, n, |r, j| fv[(j, order[r])].conj()),
    })
}

pub fn singular_values(a: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    Ok(svd(a)?.singular_values)
}

/// Nearest unitary (polar factor) `U Vᴴ` of a square matrix.
pub fn polar_unitary(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let s = svd(a)?;
    Ok(s.u * s.v_adjoint)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a real symmetric
/// matrix; only the lower triangle is read.
pub fn eigh_real(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let m = Mat::from_fn(n, n, |i, j| a[(i, j)]);
    let dec = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Precondition(format!("eigendecomposition failed: {e:?}")))?;
    let (s, u) = (dec.S().column_vector(), dec.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    Ok((order.iter().map(|&k| s[k]).collect(), DMatrix::from_fn(n, n, |i, c| u[(i, order[c])])))
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn eigh_hermitian(a: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = a.nrows();
    let dec = to_faer(a)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Precondition(format!("eigendecomposition failed: {e:?}")))?;
    let (s, u) = (dec.S().column_vector(), dec.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].re.total_cmp(&s[j].re));
    Ok((order.iter().map(|&k| s[k].re).collect(), DMatrix::from_fn(n, n, |i, c| u[(i, order[c])])))
}

/// Real matrix as a complex one.
pub fn complexify(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|x| Complex64::new(x, 0.0))
}

pub fn max_abs(a: &DMatrix<Complex64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
