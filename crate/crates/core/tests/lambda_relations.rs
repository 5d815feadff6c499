use extsource_core::lambda_functions::LambdaFunctions;
use extsource_core::{Complex64, Side, SpectralCurve};

fn lf(a: f64, t: f64) -> LambdaFunctions {
    LambdaFunctions::new(SpectralCurve::from_a_t(a, t).unwrap()).unwrap()
}

#[test]
fn jump_relations_hold_at_two_parameter_points() {
    for (a, t) in [(2.0, 0.5), (2.5, 0.3)] {
        let report = lf(a, t).check_jump_relations(20).unwrap();
        for r in &report.relations {
            println!("a={a} t={t} {:<60} {:.3e}", r.relation, r.max_residual);
            assert!(r.max_residual <= 1e-8, "{} residual {}", r.relation, r.max_residual);
        }
    }
}

#[test]
fn dominant_real_part_near_each_interval() {
    let l = lf(2.0, 0.5);
    let s = l.curve.support;
    for interval in 0..3 {
        let mut previous = f64::INFINITY;
        for factor in [1e-2, 1e-3] {
            let rep = l.check_lemma_ordering(interval, factor * (s.z3 - s.z2), 20).unwrap();
            println!("interval {interval} offset {factor:e}: min margin {:.3e}", rep.min_margin());
            assert!(rep.violations.is_empty(), "interval {interval}: {:?}", rep.violations.first());
            assert!(rep.min_margin() < previous);
            previous = rep.min_margin();
        }
    }
}

#[test]
fn large_z_expansions() {
    let l = lf(2.0, 0.5);
    let p = l.curve.params;
    let w = p.outer_weight();
    let c = l.integration_constants().unwrap();
    let mut errors = Vec::new();
    for radius in [1e2, 1e3] {
        let z = Complex64::new(radius, 0.0) * Complex64::from_polar(1.0, 0.3);
        let ln = z.ln();
        let expected = [
            z * z * 0.5 - ln + c[0],
            z * p.a + ln * w + c[1],
            ln * p.t + c[2],
            -z * p.a + ln * w + c[3],
        ];
        let err: Vec<f64> =
            (0..4).map(|j| (l.lambda(z, j + 1, Side::OffAxis).unwrap() - expected[j]).norm()).collect();
        println!("|z|={radius}: {err:?}");
        errors.push(err);
    }
    // sheets 1 and 3 have O(1/z^2) remainders; 2 and 4 only O(1/z)
    assert!(errors[1][0] <= 1e-4 && errors[1][2] <= 1e-4);
    for j in 0..4 {
        assert!(errors[1][j] * 5.0 <= errors[0][j], "sheet {}: {:?}", j + 1, errors);
    }
}

#[test]
fn constants_independent_of_path_elevation() {
    let curve = SpectralCurve::from_a_t(2.0, 0.5).unwrap();
    let base = LambdaFunctions::new(curve).unwrap();
    let doubled = LambdaFunctions::with_elevation(curve, 2.0 * base.elevation).unwrap();
    let c1 = base.integration_constants().unwrap();
    let c2 = doubled.integration_constants().unwrap();
    for j in 0..4 {
        assert!((c1[j] - c2[j]).norm() < 1e-8, "l_{}: {} vs {}", j + 1, c1[j], c2[j]);
    }
}
