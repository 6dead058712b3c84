//! Symplectic linear algebra in `(q_1..q_n, p_1..p_n)` ordering.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `Ω = [[0, I], [-I, 0]]` on `n` modes.
pub fn omega(n_modes: usize) -> DMatrix<f64> {
    let mut om = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for i in 0..n_modes {
        om[(i, n_modes + i)] = 1.0;
        om[(n_modes + i, i)] = -1.0;
    }
    om
}

/// `‖Sᵀ Ω S - Ω‖_max`.
pub fn symplectic_residual(s: &DMatrix<f64>) -> f64 {
    let om = omega(s.nrows() / 2);
    (s.transpose() * &om * s - om).amax()
}

/// Inverse of a symplectic matrix, `S⁻¹ = -Ω Sᵀ Ω`.
pub fn symplectic_inverse(s: &DMatrix<f64>) -> DMatrix<f64> {
    let om = omega(s.nrows() / 2);
    -(&om * s.transpose() * &om)
}

/// Eigen-decomposition based matrix square root of a symmetric PSD matrix.
fn sqrt_psd(v: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(v.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Symplectic eigenvalues `ν_k` of a covariance matrix, ascending.
///
/// They are the positive eigenvalues of the Hermitian matrix
/// `i V^{1/2} Ω V^{1/2}`.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Vec<f64> {
    let n = cov.nrows() / 2;
    let root = sqrt_psd(cov);
    let k = &root * omega(n) * &root;
    let herm = k.map(|x| Complex64::new(0.0, x));
    let eig = SymmetricEigen::new(herm);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    // eigenvalues come in ± pairs; keep the upper half
    vals.split_off(n)
}

/// Smallest eigenvalue of `V + (i/2) Ω`; non-negative for a physical state.
pub fn uncertainty_min_eigenvalue(cov: &DMatrix<f64>) -> f64 {
    let n = cov.nrows() / 2;
    let om = omega(n);
    let herm = DMatrix::from_fn(2 * n, 2 * n, |i, j| Complex64::new(cov[(i, j)], 0.5 * om[(i, j)]));
    SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Williamson normal form: symplectic `S` with `S V Sᵀ = diag(ν, ν)`.
#[derive(Debug, Clone)]
pub struct Williamson {
    pub symplectic: DMatrix<f64>,
    /// Symplectic eigenvalues, ascending.
    pub nu: Vec<f64>,
}

/// Williamson decomposition of a positive definite covariance.
///
/// With `K = V^{-1/2} Ω V^{-1/2}` antisymmetric, the eigenvectors `w_k` of the
/// Hermitian `iK` for eigenvalue `1/ν_k > 0` split as `w = (a + ib)/√2` with
/// orthonormal real `a, b` and `K a = (1/ν) b`. Collecting `O = [b…, a…]` gives
/// `Oᵀ K O = [[0, Λ], [-Λ, 0]]`, and `S = N^{1/2} Oᵀ V^{-1/2}`.
pub fn williamson(cov: &DMatrix<f64>) -> Result<Williamson> {
    let dim = cov.nrows();
    if !dim.is_multiple_of(2) || cov.ncols() != dim {
        return Err(Error::ShapeMismatch(format!("covariance is {}x{}", dim, cov.ncols())));
    }
    let n = dim / 2;
    let eig = SymmetricEigen::new(cov.clone());
    let min_ev = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_ev > 0.0) {
        return Err(Error::Precondition(format!("covariance not positive definite (min eigenvalue {min_ev:e})")));
    }
    let inv_root = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.sqrt()))
        * eig.eigenvectors.transpose();
    let k = &inv_root * omega(n) * &inv_root;
    let herm = k.map(|x| Complex64::new(0.0, x));
    let ek = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..dim).collect();
    // largest 1/ν first would give ascending ν
    order.sort_by(|&i, &j| ek.eigenvalues[j].total_cmp(&ek.eigenvalues[i]));
    let mut o = DMatrix::<f64>::zeros(dim, dim);
    let mut nu = Vec::with_capacity(n);
    for (slot, &idx) in order.iter().take(n).enumerate() {
        let lambda = ek.eigenvalues[idx];
        let w = ek.eigenvectors.column(idx);
        let sqrt2 = std::f64::consts::SQRT_2;
        for r in 0..dim {
            o[(r, slot)] = sqrt2 * w[r].im; // b
            o[(r, n + slot)] = sqrt2 * w[r].re; // a
        }
        nu.push(1.0 / lambda);
    }
    let mut scale = DMatrix::<f64>::zeros(dim, dim);
    for (i, v) in nu.iter().enumerate() {
        scale[(i, i)] = v.sqrt();
        scale[(n + i, n + i)] = v.sqrt();
    }
    let symplectic = scale * o.transpose() * inv_root;
    Ok(Williamson { symplectic, nu })
}

/// Single-mode rotation/squeeze helpers for tests and perturbations.
pub fn squeeze(n_modes: usize, r: f64) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for i in 0..n_modes {
        s[(i, i)] = r.exp();
        s[(n_modes + i, n_modes + i)] = (-r).exp();
    }
    s
}

/// Random symplectic matrix: product of a passive rotation, single-mode
/// squeezes and another passive rotation, all drawn from `rng`.
pub fn random_symplectic<R: rand::Rng>(n_modes: usize, max_squeeze: f64, rng: &mut R) -> DMatrix<f64> {
    let r: Vec<f64> = (0..n_modes).map(|_| rng.gen_range(-max_squeeze..=max_squeeze)).collect();
    let mut sq = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for (i, ri) in r.iter().enumerate() {
        sq[(i, i)] = ri.exp();
        sq[(n_modes + i, n_modes + i)] = (-ri).exp();
    }
    random_passive(n_modes, rng) * sq * random_passive(n_modes, rng)
}

/// Orthogonal symplectic matrix from a random unitary `U = X + iY`.
pub fn random_passive<R: rand::Rng>(n_modes: usize, rng: &mut R) -> DMatrix<f64> {
    let z = DMatrix::from_fn(n_modes, n_modes, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let u = z.qr().q();
    passive_from_unitary(&u)
}

/// Real `2n × 2n` representation `[[X, -Y], [Y, X]]` of `U = X + iY`.
pub fn passive_from_unitary(u: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = u.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = u[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_symplectics_are_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..6 {
            let s = random_symplectic(n, 0.8, &mut rng);
            assert!(symplectic_residual(&s) < 1e-12);
            let inv = symplectic_inverse(&s);
            assert!((&inv * &s - DMatrix::identity(2 * n, 2 * n)).amax() < 1e-12);
        }
    }

    #[test]
    fn williamson_recovers_thermal_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let nu = [0.5, 0.9, 2.5];
        let mut d = DMatrix::<f64>::zeros(6, 6);
        for (i, v) in nu.iter().enumerate() {
            d[(i, i)] = *v;
            d[(3 + i, 3 + i)] = *v;
        }
        let s = random_symplectic(3, 0.7, &mut rng);
        let cov = &s * d * s.transpose();
        let w = williamson(&cov).unwrap();
        for (a, b) in w.nu.iter().zip(nu.iter()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(symplectic_residual(&w.symplectic) < 1e-10);
        let normal = &w.symplectic * &cov * w.symplectic.transpose();
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { nu[i % 3] } else { 0.0 };
                assert!((normal[(i, j)] - expect).abs() < 1e-9);
            }
        }
        let sev = symplectic_eigenvalues(&cov);
        for (a, b) in sev.iter().zip(nu.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn vacuum_saturates_uncertainty() {
        let cov = DMatrix::<f64>::identity(4, 4) * 0.5;
        assert!(uncertainty_min_eigenvalue(&cov).abs() < 1e-14);
        let bad = DMatrix::<f64>::identity(4, 4) * 0.4;
        assert!(uncertainty_min_eigenvalue(&bad) < -0.05);
    }
}
