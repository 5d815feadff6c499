use extsource_core::asymptotics::{airy_kernel, sine_kernel};
use extsource_core::density::rho;
use extsource_core::ensemble_mc::{sample_eigenvalues, EnsembleConfig};
use extsource_core::mop::{faddeeva, lattice_polynomials, mop_build, FiniteSizeParams};
use extsource_core::spectral_curve::{classify_phase, cubic_companion_roots, Phase};
use extsource_core::{Complex64, Edge, ModelParams, SpectralCurve};
use proptest::prelude::*;

fn three_cut() -> impl Strategy<Value = (f64, f64)> {
    (1.8f64..3.2, 0.05f64..0.95)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn branch_points_ordered_and_edges_symmetric((a, t) in three_cut()) {
        let curve = SpectralCurve::from_a_t(a, t).unwrap();
        let s = curve.support;
        prop_assert!(0.0 < s.z1 && s.z1 < s.z2 && s.z2 < s.z3);
        for e in Edge::ALL {
            prop_assert!((s.rho_edge(e) - s.rho_edge(e.mirror())).abs() <= 1e-10 * s.rho_edge(e));
        }
    }

    #[test]
    fn density_even_and_nonnegative((a, t) in three_cut(), frac in 0.0f64..1.0) {
        let curve = SpectralCurve::from_a_t(a, t).unwrap();
        let x = frac * 1.1 * curve.support.z3;
        let right = rho(&curve, x).unwrap().rho;
        let left = rho(&curve, -x).unwrap().rho;
        prop_assert!(right >= 0.0);
        prop_assert!((right - left).abs() <= 1e-10 * (1.0 + right));
    }

    #[test]
    fn cubic_roots_real_positive_in_three_cut_phase(b in 3.01f64..10.0, t in 0.01f64..0.99) {
        let p = ModelParams::new(b.sqrt(), t).unwrap();
        prop_assert_eq!(classify_phase(&p).phase, Phase::ThreeCut);
        prop_assert!(classify_phase(&p).delta_c > 0.0);
        for r in cubic_companion_roots(&p) {
            prop_assert!(r.re > 0.0 && r.im.abs() < 1e-8 * (1.0 + r.re));
        }
    }

    #[test]
    fn faddeeva_reflection(re in -12.0f64..12.0, im in 0.0f64..12.0) {
        let z = Complex64::new(re, im);
        let lhs = faddeeva(-z.conj());
        prop_assert!((lhs - faddeeva(z).conj()).norm() <= 1e-13 * lhs.norm().max(1e-3));
    }

    #[test]
    fn split_balances_outer_blocks(t in 0.02f64..0.98, n in 3usize..400) {
        if let Ok(fp) = FiniteSizeParams::from_t(2.0, t, n) {
            prop_assert_eq!(fp.n1, fp.n3);
            prop_assert_eq!(fp.n1 + fp.n2 + fp.n3, n);
            prop_assert!((fp.n2 as f64 - t * n as f64).abs() <= 1.5);
        }
    }

    #[test]
    fn limiting_kernels_symmetric(u in -4.0f64..3.0, v in -4.0f64..3.0) {
        prop_assert_eq!(sine_kernel(u, v), sine_kernel(v, u));
        let (k1, k2) = (airy_kernel(u, v), airy_kernel(v, u));
        prop_assert!((k1 - k2).abs() <= 1e-14 * (1.0 + k1.abs()));
    }

    #[test]
    fn lattice_and_solved_coefficients_agree(re in -4.0f64..4.0, im in 0.05f64..2.0) {
        let fp = FiniteSizeParams::from_t(2.0, 0.5, 6).unwrap();
        let z = Complex64::new(re, im);
        let fam = mop_build(&fp, fp.index()).unwrap();
        let lattice = lattice_polynomials(&fp, fp.index(), z).unwrap();
        let direct = fam.eval(z);
        prop_assert!((lattice.values[0] - direct).norm() <= 1e-10 * direct.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn sampling_reproducible(seed in any::<u64>()) {
        let fp = FiniteSizeParams::from_t(2.0, 0.5, 12).unwrap();
        let cfg = EnsembleConfig::new(&fp, seed, 3);
        let first = sample_eigenvalues(&cfg).unwrap();
        prop_assert_eq!(&first, &sample_eigenvalues(&cfg).unwrap());
        for s in &first {
            prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
