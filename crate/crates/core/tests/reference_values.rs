//! Frozen reference numbers. Each is recomputed here by a route that does
//! not go through the engine (dense matrix functions, closed forms, or the
//! truncated Fock oracle) and compared with both the frozen value and the
//! engine.

use lightcone_core::gaussian;
use lightcone_core::harness::{cat_scenario, Interval, LocalField, Perturbation, ScenarioConfig};
use lightcone_core::oracle::{partial_trace, density_moments, FockLattice, FockSystem};
use lightcone_core::superposition::{overlap, vacuum_witness, CoherentSuperposition};
use lightcone_core::{LatticeSpec, Region};
use nalgebra::{DMatrix, SymmetricEigen};

/// `m² I − ∇²` for the nearest-neighbour lattice, built from scratch.
fn mass_matrix(n: usize, a: f64, m: f64) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(n, n);
    for x in 0..n {
        k[(x, x)] += m * m + 2.0 / (a * a);
        k[(x, (x + 1) % n)] -= 1.0 / (a * a);
        k[((x + 1) % n, x)] -= 1.0 / (a * a);
    }
    k
}

fn matrix_power(k: &DMatrix<f64>, p: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(k.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.powf(p)));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Vacuum `(⟨φφ⟩, ⟨ππ⟩)` blocks for `[φ_x, π_y] = i δ_xy / a`.
fn dense_vacuum(n: usize, a: f64, m: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = mass_matrix(n, a, m);
    (matrix_power(&k, -0.5) / (2.0 * a), matrix_power(&k, 0.5) / (2.0 * a))
}

const TWO_SITE_PHI2: f64 = 0.361_803_398_874_989_5;
const TWO_SITE_PI2: f64 = 0.809_016_994_374_947_5;
const TWO_SITE_ENERGY: f64 = 1.618_033_988_749_895;
const CAT_WITNESS_16: f64 = 1.447_796_731_332_397_7e-2;
const CAT_WITNESS_3: f64 = 1.765_212_276_454_614e-2;

#[test]
fn two_site_vacuum() {
    let (pp, qq) = dense_vacuum(2, 1.0, 1.0);
    assert!((pp[(0, 0)] - TWO_SITE_PHI2).abs() < 1e-14);
    assert!((qq[(0, 0)] - TWO_SITE_PI2).abs() < 1e-14);

    let spec = LatticeSpec::unit(2, 1.0).unwrap();
    let d = gaussian::restrict(&gaussian::vacuum(&spec).unwrap(), &Region::new(2, [0]).unwrap()).unwrap();
    assert!((d.cov_block[(0, 0)] - TWO_SITE_PHI2).abs() < 1e-14);
    assert!((d.cov_block[(1, 1)] - TWO_SITE_PI2).abs() < 1e-14);
    assert!(d.cov_block[(0, 1)].abs() < 1e-15);

    let fl = FockLattice::new(spec, 12).unwrap();
    let sys = FockSystem::new(fl.clone()).unwrap();
    assert!((sys.ground_energy() - TWO_SITE_ENERGY).abs() < 1e-6);
    let g = sys.ground_state();
    let rho = partial_trace(&(&g * g.adjoint()), &fl, &Region::new(2, [0]).unwrap()).unwrap();
    let (_, cov) = density_moments(&rho, &fl, 1);
    assert!((cov[(0, 0)] - TWO_SITE_PHI2).abs() < 1e-5);
    assert!((cov[(1, 1)] - TWO_SITE_PI2).abs() < 1e-5);
}

#[test]
fn vacuum_covariance_matches_dense_matrix_functions() {
    for (n, a, m) in [(16, 1.0, 1.0), (24, 0.5, 0.3), (9, 2.0, 1.5)] {
        let spec = LatticeSpec::new(n, a, m, lightcone_core::Dispersion::Lattice).unwrap();
        let vac = gaussian::vacuum(&spec).unwrap();
        let (pp, qq) = dense_vacuum(n, a, m);
        let got_pp = vac.covariance.view((0, 0), (n, n));
        let got_qq = vac.covariance.view((n, n), (n, n));
        assert!((got_pp - &pp).amax() < 1e-12);
        assert!((got_qq - &qq).amax() < 1e-12);
    }
}

#[test]
fn unit_displacement_overlap() {
    let spec = LatticeSpec::unit(1, 1.0).unwrap();
    let z = overlap(&spec, (&[1.0], &[0.0]), (&[0.0], &[0.0])).unwrap();
    assert!((z.norm_sqr() - (-0.5f64).exp()).abs() < 1e-14);
    // the oracle at a large single-site cutoff
    let sys = FockSystem::new(FockLattice::new(spec, 30).unwrap()).unwrap();
    let v = sys.coherent_state(&[1.0], &[0.0]).unwrap().state;
    assert!((sys.ground_state().dotc(&v).norm_sqr() - (-0.5f64).exp()).abs() < 1e-8);
}

/// Closed form for the cat `|ξ⟩ + |−ξ⟩` with a field kick `φ_c` on one site:
/// on the complement the first moments vanish and the second moments drop by
/// `χ/(1+χ) (Σℓ)(Σℓ)ᵀ`, with `ℓ` the symplectic image of `2ξ`.
fn closed_form_cat_witness(n: usize, kicked: usize, phi_c: f64) -> f64 {
    let a = 1.0;
    let (_, qq) = dense_vacuum(n, a, 1.0);
    let l = 2.0 * a * phi_c;
    let chi = (-0.5 * l * l * qq[(kicked, kicked)]).exp();
    (0..n)
        .filter(|&x| x != kicked)
        .map(|x| chi / (1.0 + chi) * (l * qq[(x, kicked)]).powi(2))
        .fold(0.0, f64::max)
}

#[test]
fn sixteen_site_cat_witness() {
    let independent = closed_form_cat_witness(16, 7, 1.0);
    assert!((independent - CAT_WITNESS_16).abs() < 1e-12 * CAT_WITNESS_16);

    let spec = LatticeSpec::unit(16, 1.0).unwrap();
    let cat = Perturbation::CatPair { dphi: LocalField::Uniform(1.0), dpi: LocalField::Uniform(0.0) };
    let report = cat_scenario(&ScenarioConfig::new(spec, Interval { start: 7, len: 1 }, 0.0, cat)).unwrap();
    assert!((report.superposition_witness - CAT_WITNESS_16).abs() < 1e-12 * CAT_WITNESS_16);
    assert!(report.pass);
}

#[test]
fn three_site_cat_witness() {
    let spec = LatticeSpec::unit(3, 1.0).unwrap();
    let region = Region::new(3, [1, 2]).unwrap();
    let sup = CoherentSuperposition::cat(spec, vec![1.0, 0.0, 0.0], vec![0.0; 3]).unwrap();
    let engine = vacuum_witness(&sup, &region).unwrap();
    assert!((engine - CAT_WITNESS_3).abs() < 1e-12 * CAT_WITNESS_3);
    assert!((closed_form_cat_witness(3, 0, 1.0) - CAT_WITNESS_3).abs() < 1e-12 * CAT_WITNESS_3);

    let sys = FockSystem::new(FockLattice::new(spec, 10).unwrap()).unwrap();
    let oracle = lightcone_core::oracle::cat_witness(&sys, &[1.0, 0.0, 0.0], &[0.0; 3], &region).unwrap();
    assert!((oracle - CAT_WITNESS_3).abs() < 1e-4 * CAT_WITNESS_3);
}
