//! Propagator kernels of the free field as circulant matrices.
//!
//! Every kernel is `K(x - y) = (1/(n a)) Σ_k w(ω_k, t) e^{i k (x - y)}` for a
//! role-specific mode weight `w`. Products of kernels carry one factor of the
//! spacing `a` per summed site (the discrete `∫dy`), and the delta function is
//! `(1/a)·I`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{circulant_dense, circulant_row, LatticeSpec};

/// Modes with `|sin(ω t)|` at or below this are treated as caustics.
pub const CAUSTIC_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelRole {
    /// `ω cot(ωt)`
    #[serde(rename = "G")]
    BigG,
    /// `ω / sin(ωt)`
    #[serde(rename = "g")]
    SmallG,
    /// `sin(ωt) / ω`, the field commutator.
    #[serde(rename = "gInv")]
    GInv,
    /// `ω`, the vacuum width kernel.
    #[serde(rename = "E")]
    Energy,
    /// `-ω² / sin²(ωt)`
    #[serde(rename = "dG_dt")]
    DBigGDt,
    /// `cos(ωt)`
    #[serde(rename = "dgInv_dt")]
    DGInvDt,
}

impl KernelRole {
    pub fn name(self) -> &'static str {
        match self {
            KernelRole::BigG => "G",
            KernelRole::SmallG => "g",
            KernelRole::GInv => "gInv",
            KernelRole::Energy => "E",
            KernelRole::DBigGDt => "dG_dt",
            KernelRole::DGInvDt => "dgInv_dt",
        }
    }

    fn singular_at_caustics(self) -> bool {
        matches!(self, KernelRole::BigG | KernelRole::SmallG | KernelRole::DBigGDt)
    }

    /// Mode weight, with the `ω → 0` limits for a massless zero mode.
    fn weight(self, omega: f64, t: f64) -> f64 {
        if omega == 0.0 {
            return match self {
                KernelRole::BigG | KernelRole::SmallG => 1.0 / t,
                KernelRole::GInv => t,
                KernelRole::Energy => 0.0,
                KernelRole::DBigGDt => -1.0 / (t * t),
                KernelRole::DGInvDt => 1.0,
            };
        }
        let (s, c) = (omega * t).sin_cos();
        match self {
            KernelRole::BigG => omega * c / s,
            KernelRole::SmallG => omega / s,
            KernelRole::GInv => s / omega,
            KernelRole::Energy => omega,
            KernelRole::DBigGDt => -omega * omega / (s * s),
            KernelRole::DGInvDt => c,
        }
    }
}

/// A translation-invariant kernel evaluated at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMatrix {
    pub role: KernelRole,
    /// `None` for the time-independent `E` kernel.
    pub time: Option<f64>,
    pub spacing: f64,
    /// Eigenvalue weight of each momentum mode.
    pub weights: Vec<f64>,
    /// `K(d)` for `d = 0..n`, i.e. the first row of the matrix.
    pub row: Vec<f64>,
}

impl KernelMatrix {
    fn from_weights(role: KernelRole, time: Option<f64>, spacing: f64, weights: Vec<f64>) -> Self {
        let row = circulant_row(&weights).into_iter().map(|c| c / spacing).collect();
        Self { role, time, spacing, weights, row }
    }

    pub fn n_sites(&self) -> usize {
        self.row.len()
    }

    /// Entry `K(x, y)`.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        let n = self.row.len();
        self.row[(y + n - x % n) % n]
    }

    pub fn entries(&self) -> DMatrix<f64> {
        circulant_dense(&self.row)
    }

    /// Kernel `K⁻¹` with `∫dy K(x,y) K⁻¹(y,z) = δ(x-z)`, i.e. inverted mode weights.
    pub fn integral_inverse(&self) -> Result<KernelMatrix> {
        if let Some(k) = self.weights.iter().position(|w| *w == 0.0) {
            return Err(Error::Precondition(format!("kernel weight of mode {k} is zero")));
        }
        let weights = self.weights.iter().map(|w| 1.0 / w).collect();
        Ok(Self::from_weights(self.role, self.time, self.spacing, weights))
    }
}

/// Build kernel `role` at time `t` (ignored for `E`).
pub fn build_kernel(spec: &LatticeSpec, role: KernelRole, t: f64) -> Result<KernelMatrix> {
    spec.validate()?;
    let freqs = spec.frequencies();
    if role == KernelRole::Energy {
        if spec.mass <= 0.0 {
            return Err(Error::MasslessVacuum);
        }
        return Ok(KernelMatrix::from_weights(role, None, spec.spacing, freqs));
    }
    if role.singular_at_caustics() {
        for (k, &w) in freqs.iter().enumerate() {
            // massless zero mode: sin(ωt)/ω → t
            let s = if w == 0.0 { t } else { (w * t).sin() };
            if s.abs() <= CAUSTIC_EPSILON {
                return Err(Error::Caustic { t, mode: k, sin_value: s.abs() });
            }
        }
    }
    let weights = freqs.iter().map(|&w| role.weight(w, t)).collect();
    Ok(KernelMatrix::from_weights(role, Some(t), spec.spacing, weights))
}

/// Kernel identities checked by [`verify_identity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IdentityKind {
    /// `∫dy g⁻¹(x-y) g(y-z) = δ(x-z)`
    #[serde(rename = "gg")]
    InversePair,
    /// `∫dy g⁻¹ G = ∂_t g⁻¹`
    #[serde(rename = "gG1")]
    GInvBigG,
    /// `∫dz ∂_t g⁻¹ G = g + ∂_t² g⁻¹`
    #[serde(rename = "gG2")]
    DGInvBigG,
    /// The three quadratic identities `GG`, `Gg`, `gg` used for the field
    /// propagator's Schrödinger equation.
    #[serde(rename = "GG_appendix")]
    Quadratic,
}

impl IdentityKind {
    pub const ALL: [IdentityKind; 4] =
        [IdentityKind::InversePair, IdentityKind::GInvBigG, IdentityKind::DGInvBigG, IdentityKind::Quadratic];

    pub fn name(self) -> &'static str {
        match self {
            IdentityKind::InversePair => "gg",
            IdentityKind::GInvBigG => "gG1",
            IdentityKind::DGInvBigG => "gG2",
            IdentityKind::Quadratic => "GG_appendix",
        }
    }

    /// Whether the identity involves finite-difference time derivatives.
    pub fn uses_time_derivative(self) -> bool {
        !matches!(self, IdentityKind::InversePair)
    }
}

/// Centered difference `(K(t+dt) - K(t-dt)) / 2dt` of a kernel.
fn time_derivative(spec: &LatticeSpec, role: KernelRole, t: f64, dt: f64) -> Result<DMatrix<f64>> {
    let plus = build_kernel(spec, role, t + dt)?.entries();
    let minus = build_kernel(spec, role, t - dt)?.entries();
    Ok((plus - minus) / (2.0 * dt))
}

/// Max-norm residual of a discretized kernel identity at time `t`.
///
/// First time derivatives are centered differences of the kernel itself; the
/// second derivative of `g⁻¹` is the centered difference of the cosine kernel
/// `∂_t g⁻¹`, which keeps roundoff at `O(ε/dt)`.
pub fn verify_identity(spec: &LatticeSpec, which: IdentityKind, t: f64, dt: f64) -> Result<f64> {
    if which.uses_time_derivative() && !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Precondition(format!("dt must be positive, got {dt}")));
    }
    let a = spec.spacing;
    let n = spec.n_sites;
    let delta = DMatrix::<f64>::identity(n, n) / a;
    let residual = match which {
        IdentityKind::InversePair => {
            let ginv = build_kernel(spec, KernelRole::GInv, t)?.entries();
            let g = build_kernel(spec, KernelRole::SmallG, t)?.entries();
            (&ginv * &g) * a - delta
        }
        IdentityKind::GInvBigG => {
            let ginv = build_kernel(spec, KernelRole::GInv, t)?.entries();
            let big = build_kernel(spec, KernelRole::BigG, t)?.entries();
            let d_ginv = time_derivative(spec, KernelRole::GInv, t, dt)?;
            (&ginv * &big) * a - d_ginv
        }
        IdentityKind::DGInvBigG => {
            let big = build_kernel(spec, KernelRole::BigG, t)?.entries();
            let g = build_kernel(spec, KernelRole::SmallG, t)?.entries();
            let d_ginv = time_derivative(spec, KernelRole::GInv, t, dt)?;
            let d2_ginv = time_derivative(spec, KernelRole::DGInvDt, t, dt)?;
            (&d_ginv * &big) * a - g - d2_ginv
        }
        IdentityKind::Quadratic => {
            let big = build_kernel(spec, KernelRole::BigG, t)?.entries();
            let g = build_kernel(spec, KernelRole::SmallG, t)?.entries();
            let d_big = time_derivative(spec, KernelRole::BigG, t, dt)?;
            let d_g = time_derivative(spec, KernelRole::SmallG, t, dt)?;
            // ∇²δ - m²δ on the lattice: (1/a)(∇² - m²) as plain matrices.
            let mut lap_minus_m2 = spec.laplacian();
            for i in 0..n {
                lap_minus_m2[(i, i)] -= spec.mass * spec.mass;
            }
            lap_minus_m2 /= a;
            // kernels are symmetric, so ∫dx K1(x-y) K2(x-z) is (K1ᵀ K2)(y,z) = (K1 K2)(y,z)
            let r1 = (&big * &big) * a + &d_big - lap_minus_m2;
            let r2 = (&big * &g) * a + &d_g;
            let r3 = (&g * &g) * a + &d_big;
            return Ok(r1.amax().max(r2.amax()).max(r3.amax()));
        }
    };
    Ok(residual.amax())
}

/// Radial profile of the commutator kernel `|g⁻¹(x; t)|`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LightconeProfile {
    pub t: f64,
    /// `(distance, |g⁻¹|)` for distances `0, a, 2a, …` up to half the box.
    pub points: Vec<(f64, f64)>,
    /// Fastest group velocity over the modes; the signal front sits at
    /// `front_velocity · t`.
    pub front_velocity: f64,
    /// Least-squares slope of `ln|g⁻¹|` against distance over the resolved
    /// points beyond the front; `None` when fewer than two such points exist.
    pub tail_slope: Option<f64>,
    /// Values below this are at the roundoff floor and excluded from the fit.
    pub noise_floor: f64,
}

impl LightconeProfile {
    /// Magnitude at the lattice distance closest to `distance`.
    pub fn magnitude_at(&self, distance: f64) -> f64 {
        self.points
            .iter()
            .min_by(|a, b| (a.0 - distance).abs().total_cmp(&(b.0 - distance).abs()))
            .map(|p| p.1)
            .unwrap_or(0.0)
    }
}

/// Profile of `|g⁻¹(x; t)|` against `|x|`, with the fitted exponential rate
/// of the tail beyond the fastest mode's front. On a coarse lattice that
/// front lies well inside `|x| = t`, so the kernel is already at roundoff
/// there.
///
/// `margin` is the extra length required beyond `2t` so that the cone and its
/// periodic images do not meet.
pub fn lightcone_profile(spec: &LatticeSpec, t: f64, margin: f64) -> Result<LightconeProfile> {
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("light-cone profile needs t > 0, got {t}")));
    }
    if spec.length() <= 2.0 * t + margin {
        return Err(Error::PeriodicWrap(format!(
            "box length {} must exceed 2t + margin = {}",
            spec.length(),
            2.0 * t + margin
        )));
    }
    let kernel = build_kernel(spec, KernelRole::GInv, t)?;
    let n = spec.n_sites;
    let points: Vec<(f64, f64)> =
        (0..=n / 2).map(|d| (d as f64 * spec.spacing, kernel.row[d].abs())).collect();
    // Each row entry is a sum of n terms of size ≤ |w|/(n a).
    let wmax = kernel.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let noise_floor = 64.0 * f64::EPSILON * wmax / spec.spacing;
    let front_velocity = (0..n).map(|k| spec.group_velocity(k).abs()).fold(0.0, f64::max);
    let front = front_velocity * t;
    let tail: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, v)| *d > front && *v > noise_floor)
        .map(|&(d, v)| (d, v.ln()))
        .collect();
    let tail_slope = (tail.len() >= 2).then(|| least_squares_slope(&tail));
    Ok(LightconeProfile { t, points, front_velocity, tail_slope, noise_floor })
}

fn least_squares_slope(xy: &[(f64, f64)]) -> f64 {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Dispersion;
    use std::f64::consts::FRAC_PI_2;

    fn single() -> LatticeSpec {
        LatticeSpec::unit(1, 1.0).unwrap()
    }

    #[test]
    fn single_mode_values() {
        let g = build_kernel(&single(), KernelRole::SmallG, FRAC_PI_2).unwrap();
        assert!((g.get(0, 0) - 1.0).abs() < 1e-15);
        let big = build_kernel(&single(), KernelRole::BigG, FRAC_PI_2).unwrap();
        assert!(big.get(0, 0).abs() < 1e-15);
        let ginv = build_kernel(&single(), KernelRole::GInv, FRAC_PI_2).unwrap();
        assert!((ginv.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ginv_at_zero_is_zero_matrix() {
        let spec = LatticeSpec::unit(8, 0.5).unwrap();
        let k = build_kernel(&spec, KernelRole::GInv, 0.0).unwrap();
        assert_eq!(k.entries().amax(), 0.0);
    }

    #[test]
    fn caustic_rejected() {
        let spec = single();
        let err = build_kernel(&spec, KernelRole::BigG, std::f64::consts::PI).unwrap_err();
        assert!(matches!(err, Error::Caustic { mode: 0, .. }));
        assert!(matches!(build_kernel(&spec, KernelRole::SmallG, 0.0), Err(Error::Caustic { .. })));
        // the commutator and cosine kernels have no caustics
        assert!(build_kernel(&spec, KernelRole::GInv, std::f64::consts::PI).is_ok());
        assert!(build_kernel(&spec, KernelRole::DGInvDt, 0.0).is_ok());
    }

    #[test]
    fn energy_kernel_needs_mass() {
        let spec = LatticeSpec::unit(4, 0.0).unwrap();
        assert_eq!(build_kernel(&spec, KernelRole::Energy, 0.0), Err(Error::MasslessVacuum));
    }

    #[test]
    fn massless_zero_mode_limits() {
        let spec = LatticeSpec::unit(1, 0.0).unwrap();
        let t = 0.37;
        assert!((build_kernel(&spec, KernelRole::GInv, t).unwrap().row[0] - t).abs() < 1e-15);
        assert!((build_kernel(&spec, KernelRole::BigG, t).unwrap().row[0] - 1.0 / t).abs() < 1e-13);
        assert!((build_kernel(&spec, KernelRole::SmallG, t).unwrap().row[0] - 1.0 / t).abs() < 1e-13);
    }

    #[test]
    fn kernels_are_symmetric_circulants() {
        let spec = LatticeSpec::new(12, 0.7, 0.4, Dispersion::ContinuumSampled).unwrap();
        for role in [KernelRole::BigG, KernelRole::SmallG, KernelRole::GInv, KernelRole::Energy, KernelRole::DBigGDt, KernelRole::DGInvDt] {
            let k = build_kernel(&spec, role, 0.9).unwrap().entries();
            for i in 0..12 {
                for j in 0..12 {
                    assert!((k[(i, j)] - k[(j, i)]).abs() < 1e-12);
                    assert!((k[(i, j)] - k[((i + 1) % 12, (j + 1) % 12)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn inverse_pair_single_mode() {
        let r = verify_identity(&single(), IdentityKind::InversePair, FRAC_PI_2, 1e-4).unwrap();
        assert!(r < 1e-15);
    }

    #[test]
    fn analytic_derivative_roles_match_finite_differences() {
        let spec = LatticeSpec::unit(16, 1.0).unwrap();
        let (t, dt) = (0.7, 1e-5);
        for (role, deriv) in [(KernelRole::BigG, KernelRole::DBigGDt), (KernelRole::GInv, KernelRole::DGInvDt)] {
            let fd = time_derivative(&spec, role, t, dt).unwrap();
            let exact = build_kernel(&spec, deriv, t).unwrap().entries();
            assert!((fd - exact).amax() < 1e-8);
        }
    }

    #[test]
    fn integral_inverse_of_energy_kernel() {
        let spec = LatticeSpec::new(10, 0.5, 0.8, Dispersion::Lattice).unwrap();
        let e = build_kernel(&spec, KernelRole::Energy, 0.0).unwrap();
        let einv = e.integral_inverse().unwrap();
        let prod = e.entries() * einv.entries() * spec.spacing;
        let delta = DMatrix::<f64>::identity(10, 10) / spec.spacing;
        assert!((prod - delta).amax() < 1e-12);
    }

    #[test]
    fn small_time_commutator_is_local() {
        for spacing in [1.0, 0.5] {
            let spec = LatticeSpec::new(32, spacing, 1.0, Dispersion::Lattice).unwrap();
            let t = 1e-6;
            let k = build_kernel(&spec, KernelRole::GInv, t).unwrap();
            assert!((k.row[0] - t / spacing).abs() < 1e-10 * t / spacing);
            let off = k.row[1..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(off <= 1e-10 * k.row[0], "off-diagonal {off}");
        }
    }

    #[test]
    fn profile_single_site() {
        // box length 1 cannot hold a cone of width 2t for t = π/2
        assert!(matches!(lightcone_profile(&single(), FRAC_PI_2, 0.0), Err(Error::PeriodicWrap(_))));
        let k = build_kernel(&single(), KernelRole::GInv, FRAC_PI_2).unwrap();
        assert!((k.row[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn profile_decays_beyond_front() {
        let spec = LatticeSpec::unit(256, 1.0).unwrap();
        let p = lightcone_profile(&spec, 20.0, 0.0).unwrap();
        assert!(p.front_velocity > 0.5 && p.front_velocity < 1.0);
        assert!(p.tail_slope.unwrap() < 0.0);
        assert!(p.magnitude_at(30.0) < 1e-6 * p.magnitude_at(5.0));
    }

    #[test]
    fn profile_requires_positive_time() {
        let spec = LatticeSpec::unit(64, 1.0).unwrap();
        assert!(lightcone_profile(&spec, 0.0, 0.0).is_err());
    }
}
