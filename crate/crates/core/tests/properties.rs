use lightcone_core::gaussian::{self, apply_local_displacement, apply_local_symplectic, restrict};
use lightcone_core::harness::{run_causality_check, Interval, LocalField, Perturbation, ScenarioConfig};
use lightcone_core::kernels::{build_kernel, verify_identity, IdentityKind, KernelRole};
use lightcone_core::lattice::Dispersion;
use lightcone_core::local_unitary::{find_local_unitary, random_amplitudes, random_unitary, AmplitudeMatrix};
use lightcone_core::superposition::{vacuum_witness, Branch, CoherentSuperposition};
use lightcone_core::symplectic::random_symplectic;
use lightcone_core::{Error, LatticeSpec, Region};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec_strategy() -> impl Strategy<Value = LatticeSpec> {
    (2usize..40, 0.3f64..2.0, 0.1f64..2.0, any::<bool>()).prop_map(|(n, a, m, lat)| {
        let d = if lat { Dispersion::Lattice } else { Dispersion::ContinuumSampled };
        LatticeSpec::new(n, a, m, d).unwrap()
    })
}

fn full(s: &gaussian::GaussianState) -> gaussian::ReducedDescriptor {
    restrict(s, &Region::full(s.n_sites())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagator_is_symplectic(spec in spec_strategy(), t in 0.01f64..4.0) {
        match gaussian::propagator(&spec, t) {
            Ok(p) => prop_assert!(p.symplectic_residual() <= 1e-10, "residual {}", p.symplectic_residual()),
            Err(Error::Caustic { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn vacuum_is_stationary(spec in spec_strategy(), t in 0.01f64..6.0) {
        let vac = gaussian::vacuum(&spec).unwrap();
        let later = gaussian::evolve(&vac, t).unwrap();
        let d = gaussian::descriptor_distance(&full(&vac), &full(&later)).unwrap();
        prop_assert!(d <= 1e-10, "drift {d}");
    }

    #[test]
    fn evolution_keeps_purity(spec in spec_strategy(), t in 0.01f64..4.0, seed in any::<u64>(), sq in 0.0f64..0.8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = spec.n_sites;
        let region = Region::interval(n, 0, n.min(3)).unwrap();
        let sym = random_symplectic(region.len(), sq, &mut rng);
        let kicked = apply_local_symplectic(&gaussian::vacuum(&spec).unwrap(), &region, &sym).unwrap();
        let later = gaussian::evolve(&kicked, t).unwrap();
        prop_assert!(later.purity_defect() <= 1e-9, "defect {}", later.purity_defect());
        prop_assert!(later.uncertainty_min_eigenvalue() >= -1e-9);
    }

    #[test]
    fn local_operations_leave_complement_untouched(
        spec in spec_strategy(), start in 0usize..40, len in 1usize..5, seed in any::<u64>(), shift in -2.0f64..2.0,
    ) {
        let n = spec.n_sites;
        let region = Region::interval(n, start % n, len.min(n - 1)).unwrap();
        let outside = region.complement();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vac = gaussian::vacuum(&spec).unwrap();
        let sym = random_symplectic(region.len(), 0.6, &mut rng);
        let kicked = apply_local_symplectic(&vac, &region, &sym).unwrap();
        let mut dphi = vec![0.0; n];
        region.sites().iter().for_each(|&x| dphi[x] = shift);
        let moved = apply_local_displacement(&kicked, &region, &dphi, &vec![0.0; n]).unwrap();
        // bit-for-bit equality, not just small distance
        prop_assert_eq!(restrict(&vac, &outside).unwrap(), restrict(&moved, &outside).unwrap());
    }

    #[test]
    fn symplectic_group_law(spec in spec_strategy(), t1 in 0.05f64..1.5, t2 in 0.05f64..1.5) {
        let vac = gaussian::vacuum(&spec).unwrap();
        let region = Region::interval(spec.n_sites, 0, 1).unwrap();
        let s = apply_local_displacement(&vac, &region, &{
            let mut v = vec![0.0; spec.n_sites];
            v[0] = 1.0;
            v
        }, &vec![0.0; spec.n_sites]).unwrap();
        let two = gaussian::evolve(&gaussian::evolve(&s, t1).unwrap(), t2);
        let one = gaussian::evolve(&s, t1 + t2);
        if let (Ok(two), Ok(one)) = (two, one) {
            let d = gaussian::descriptor_distance(&full(&two), &full(&one)).unwrap();
            prop_assert!(d <= 1e-9, "group law {d}");
        }
    }

    #[test]
    fn kernels_are_symmetric_circulants(spec in spec_strategy(), t in 0.01f64..3.0) {
        for role in [KernelRole::BigG, KernelRole::SmallG, KernelRole::GInv] {
            if let Ok(k) = build_kernel(&spec, role, t) {
                let e = k.entries();
                prop_assert!((&e - e.transpose()).amax() == 0.0);
                let n = spec.n_sites;
                for x in 0..n {
                    prop_assert_eq!(e[(x, (x + 1) % n)], e[(0, 1)]);
                }
            }
        }
    }

    #[test]
    fn inverse_pair_identity(spec in spec_strategy(), t in 0.01f64..3.0) {
        if let Ok(r) = verify_identity(&spec, IdentityKind::InversePair, t, 0.0) {
            let ginv = build_kernel(&spec, KernelRole::GInv, t).unwrap();
            let scale = ginv.weights.iter().fold(1.0f64, |m, w| m.max(1.0 / w.abs()));
            prop_assert!(r <= 1e-12 * scale / spec.spacing, "residual {r}");
        }
    }

    #[test]
    fn unitary_completion_round_trip(m in 1usize..10, n in 1usize..10, kf in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 1 + ((m.min(n) - 1) as f64 * kf).round() as usize;
        let mut f1 = random_amplitudes(m, n, k, &mut rng);
        let norm = f1.norm();
        f1 /= Complex64::new(norm, 0.0);
        let f2 = random_unitary(m, &mut rng) * &f1;
        let r = find_local_unitary(&AmplitudeMatrix::new(f1).unwrap(), &AmplitudeMatrix::new(f2).unwrap(), 1e-10).unwrap();
        prop_assert_eq!(r.rank, k);
        prop_assert!(r.residual_unitarity <= 1e-10 && r.residual_equation <= 1e-10);
    }

    #[test]
    fn witness_ignores_branch_order(phi in -1.5f64..1.5, pi in -1.5f64..1.5, re in 0.1f64..1.0, im in -1.0f64..1.0) {
        let spec = LatticeSpec::unit(12, 1.0).unwrap();
        let mut p1 = vec![0.0; 12];
        let mut q1 = vec![0.0; 12];
        p1[3] = phi;
        q1[3] = pi;
        let b1 = Branch::new(Complex64::new(re, im), p1.clone(), q1.clone());
        let b2 = Branch::new(Complex64::new(1.0, 0.0), p1.iter().map(|x| -x).collect(), q1.iter().map(|x| -x).collect());
        let region = Region::new(12, [3]).unwrap().complement();
        let w12 = vacuum_witness(&CoherentSuperposition::new(spec, vec![b1.clone(), b2.clone()]).unwrap(), &region).unwrap();
        let w21 = vacuum_witness(&CoherentSuperposition::new(spec, vec![b2, b1.clone()]).unwrap(), &region).unwrap();
        prop_assert!((w12 - w21).abs() <= 1e-12 * w12.max(1.0));
        let single = vacuum_witness(&CoherentSuperposition::new(spec, vec![b1.clone()]).unwrap(), &region).unwrap();
        prop_assert!(single <= 1e-10);
        let twice = vacuum_witness(&CoherentSuperposition::new(spec, vec![b1.clone(), b1]).unwrap(), &region).unwrap();
        prop_assert!(twice <= 1e-10);
    }

    #[test]
    fn region_algebra(n in 3usize..60, sites in proptest::collection::vec(0usize..60, 0..10), r in 0usize..5) {
        let region = Region::new(n, sites.into_iter().map(|s| s % n)).unwrap();
        prop_assert_eq!(region.complement().complement(), region.clone());
        let grown = region.dilate(r);
        prop_assert!(region.sites().iter().all(|&s| grown.contains(s)));
        prop_assert_eq!(region.len() + region.complement().len(), n);
    }

    #[test]
    fn out_of_cone_deviation_decreases_with_margin(t in 0.5f64..6.0, kick in 0.1f64..2.0) {
        let spec = LatticeSpec::unit(64, 0.5).unwrap();
        let mut cfg = ScenarioConfig::new(spec, Interval::centered(64, 4), t, Perturbation::Displacement {
            dphi: LocalField::Uniform(kick),
            dpi: LocalField::Uniform(0.0),
        });
        cfg.margins = vec![0, 2, 4, 8, 12];
        let r = run_causality_check(&cfg).unwrap();
        let d: Vec<f64> = r.margins.iter().map(|m| m.max_deviation).collect();
        prop_assert!(d.iter().all(|v| *v >= 0.0));
        prop_assert!(d.windows(2).all(|w| w[1] <= w[0] * 1.1 + 1e-15), "{d:?}");
    }
}
