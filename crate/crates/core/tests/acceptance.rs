//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use extsource_core::asymptotics::{
    bulk_limit_check, diagonal_density_check, edge_limit_check, product_grid, LimitContext, BULK_GRID, EDGE_GRID,
};
use extsource_core::density::masses;
use extsource_core::ensemble_mc::{empirical_density, sample_eigenvalues, EnsembleConfig};
use extsource_core::lambda_functions::LambdaFunctions;
use extsource_core::model_rhp::{max_abs, CMatrix4, ModelRhp};
use extsource_core::mop::{assemble_y, trace_identity, verify_ode, verify_recurrence, verify_y_jump, FiniteSizeParams};
use extsource_core::spectral_curve::{critical_points, cubic_companion_roots, discriminants, discriminants_at};
use extsource_core::{Complex64, Edge, ModelParams, Side, SpectralCurve};

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn phase_suite() -> Outcome {
    let mut worst_root: f64 = 0.0;
    let mut ok = true;
    let golden = 0.618_033_988_749_894_9;
    for k in 0..50 {
        let b = 3.0 + 7.0 * (k as f64 + 0.5) / 50.0;
        let t = ((k as f64 + 0.5) * golden).fract().clamp(0.01, 0.99);
        let p = ModelParams::new(b.sqrt(), t).map_err(|e| e.to_string())?;
        let report = discriminants(&p);
        let support = critical_points(&p).map_err(|e| format!("b={b} t={t}: {e}"))?;
        let y = support.y_roots;
        let mut companion: Vec<Complex64> = cubic_companion_roots(&p).to_vec();
        companion.sort_by(|u, v| u.re.total_cmp(&v.re));
        for (c, r) in companion.iter().zip(y) {
            worst_root = worst_root.max((c - r).norm() / r);
        }
        ok &= report.delta_c > 0.0 && y[0] > 0.0 && y[0] < y[1] && y[1] < y[2];
    }
    let boundary = discriminants_at(3.0, 0.4).delta_q;
    ok &= worst_root <= 1e-9 && boundary == 0.0;
    Ok((ok, format!("50 pairs, companion agreement {worst_root:.1e}, delta_q(b=3) = {boundary}")))
}

fn mass_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for a in [2.0, 2.5, 3.0] {
        for t in [0.2, 0.5, 0.8] {
            let curve = SpectralCurve::from_a_t(a, t).map_err(|e| e.to_string())?;
            let m = masses(&curve).map_err(|e| e.to_string())?;
            let expected = [(1.0 - t) / 2.0, t, (1.0 - t) / 2.0];
            for (got, want) in m.iter().zip(expected) {
                worst = worst.max((got - want).abs());
            }
        }
    }
    Ok((worst <= 1e-8, format!("max mass error {worst:.2e} over 9 parameter pairs")))
}

fn lambda_jumps() -> Outcome {
    let l = LambdaFunctions::new(SpectralCurve::from_a_t(2.0, 0.5).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let report = l.check_jump_relations(20).map_err(|e| e.to_string())?;
    let count = report.relations.len();
    let worst = report.max_residual();
    Ok((count == 7 && worst <= 1e-8, format!("{count} relations x 20 points, max residual {worst:.2e}")))
}

fn lemma_ordering() -> Outcome {
    let l = LambdaFunctions::new(SpectralCurve::from_a_t(2.0, 0.5).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let s = l.curve.support;
    let mut violations = 0;
    let mut smallest = f64::INFINITY;
    for interval in 0..3 {
        for factor in [1e-2, 1e-3] {
            let r = l.check_lemma_ordering(interval, factor * (s.z3 - s.z2), 20).map_err(|e| e.to_string())?;
            violations += r.violations.len();
            smallest = smallest.min(r.min_margin());
        }
    }
    Ok((violations == 0, format!("{violations} violations, smallest margin {smallest:.2e}")))
}

fn model_certificate() -> Outcome {
    let m = ModelRhp::new(SpectralCurve::from_a_t(2.0, 0.5).map_err(|e| e.to_string())?);
    let jumps = m.verify_jumps(20).map_err(|e| e.to_string())?.max_residual();
    let identity = CMatrix4::identity();
    let deviation = |r: f64| -> Result<f64, String> {
        let mut worst: f64 = 0.0;
        for angle in [0.5, 1.3, 2.2] {
            let z = Complex64::from_polar(r, angle);
            let sol = m.solution(z, Side::OffAxis).map_err(|e| e.to_string())?;
            worst = worst.max(max_abs(&(sol.m - identity)));
        }
        Ok(worst)
    };
    let (d4, d5) = (deviation(1e4)?, deviation(1e5)?);
    let table = max_abs(&(m.value_table() - identity));
    let ok = jumps <= 1e-9 && d4 <= 1e-3 && d5 * 10.0 <= d4 * (1.0 + 1e-3) && table <= 1e-8;
    Ok((ok, format!("jumps {jumps:.1e}, |M-I| {d4:.2e} at 1e4 and {d5:.2e} at 1e5 (ratio {:.3}), value table {table:.1e}", d4 / d5)))
}

fn finite_structure() -> Outcome {
    let mut det: f64 = 0.0;
    let mut jump: f64 = 0.0;
    let mut ode: f64 = 0.0;
    let mut recurrence: f64 = 0.0;
    let mut trace: f64 = 0.0;
    let off_axis = [Complex64::new(0.4, 0.9), Complex64::new(-2.3, 0.5), Complex64::new(3.1, -0.7), Complex64::new(-0.2, -1.6)];
    let real_points: Vec<f64> = (0..10).map(|k| -3.0 + 6.0 * k as f64 / 9.0).collect();
    for n in [3, 6, 12] {
        let fp = FiniteSizeParams::from_t(2.0, 0.5, n).map_err(|e| e.to_string())?;
        for z in off_axis {
            det = det.max(assemble_y(&fp, z, Side::OffAxis).map_err(|e| e.to_string())?.det_residual);
            ode = ode.max(verify_ode(&fp, z).map_err(|e| e.to_string())?);
            recurrence = recurrence.max(verify_recurrence(&fp, fp.index(), z).map_err(|e| e.to_string())?);
        }
        jump = jump.max(verify_y_jump(&fp, &real_points).map_err(|e| e.to_string())?);
        trace = trace.max(trace_identity(&fp).map_err(|e| e.to_string())?.relative_error);
    }
    let ok = det <= 1e-9 && jump <= 1e-8 && ode <= 1e-7 && recurrence <= 1e-7 && trace <= 1e-6;
    Ok((
        ok,
        format!("n in {{3,6,12}}: det {det:.1e}, jump {jump:.1e}, ode {ode:.1e}, recurrence {recurrence:.1e}, trace {trace:.1e}"),
    ))
}

const SIZES: [usize; 3] = [12, 24, 48];

fn density_limit() -> Outcome {
    let ctx = LimitContext::new(2.0, 0.5).map_err(|e| e.to_string())?;
    let z3 = ctx.curve.support.z3;
    let r = diagonal_density_check(&ctx, &SIZES, &ctx.bulk_midpoints(), &[z3 + 0.5, -z3 - 0.5], &[Edge::Z3, Edge::Z2, Edge::Z1])
        .map_err(|e| e.to_string())?;
    let exterior = r.exterior_last();
    let ok = r.ratios_within(0.3, 0.8) && exterior <= 1e-3 && r.edges_consistent(1.5);
    let shrink: Vec<String> =
        r.edges.iter().map(|e| format!("{} {:.2}/{:.2}", e.edge.label(), e.shrink_ratios[0], e.shrink_ratios[1])).collect();
    Ok((
        ok,
        format!(
            "bulk error ratios {:.3}, {:.3}; exterior {exterior:.1e}; edge shrink {} (expected {:.2})",
            r.error_ratios[0],
            r.error_ratios[1],
            shrink.join(", "),
            2f64.cbrt()
        ),
    ))
}

fn bulk_limit() -> Outcome {
    let ctx = LimitContext::new(2.0, 0.5).map_err(|e| e.to_string())?;
    let mids = ctx.bulk_midpoints();
    let grid = product_grid(&BULK_GRID);
    let mut ok = true;
    let mut detail = Vec::new();
    for x0 in [mids[2], mids[1]] {
        let r = bulk_limit_check(&ctx, &SIZES, x0, &grid).map_err(|e| e.to_string())?;
        let (first, last) = (r.max_errors[0], r.last_error());
        ok &= last < first && last < 0.1;
        detail.push(format!("x0={x0:.4}: {first:.3e} -> {last:.3e}"));
    }
    Ok((ok, detail.join("; ")))
}

fn edge_limit() -> Outcome {
    let ctx = LimitContext::new(2.0, 0.5).map_err(|e| e.to_string())?;
    let grid = product_grid(&EDGE_GRID);
    let mut ok = true;
    let mut detail = Vec::new();
    for edge in [Edge::Z3, Edge::Z1] {
        let r = edge_limit_check(&ctx, &SIZES, edge, &grid).map_err(|e| e.to_string())?;
        ok &= r.is_strictly_decreasing();
        let errs: Vec<String> = r.max_errors.iter().map(|e| format!("{e:.3e}")).collect();
        let matched = r.convention.map(|c| format!("{:?}", c.matched)).unwrap_or_default();
        detail.push(format!("{}: {} ({matched})", edge.label(), errs.join(" > ")));
    }
    Ok((ok, detail.join("; ")))
}

fn monte_carlo() -> Outcome {
    let t = 1.0 / 3.0;
    let fp = FiniteSizeParams::from_t(2.0, t, 300).map_err(|e| e.to_string())?;
    let cfg = EnsembleConfig::new(&fp, 20_261_016, 100);
    let samples = sample_eigenvalues(&cfg).map_err(|e| e.to_string())?;
    let curve = SpectralCurve::from_a_t(2.0, t).map_err(|e| e.to_string())?;
    let h = empirical_density(&samples, &curve, 0.1).map_err(|e| e.to_string())?;
    let expected = [(1.0 - t) / 2.0, t, (1.0 - t) / 2.0];
    let mass_error = h.interval_masses.iter().zip(expected).map(|(m, e)| (m - e).abs()).fold(0.0, f64::max);
    let repeat = sample_eigenvalues(&EnsembleConfig { draws: 4, ..cfg }).map_err(|e| e.to_string())?;
    let deterministic = repeat.iter().zip(&samples).all(|(a, b)| a == b);
    let ok = h.max_deviation <= 0.02 && mass_error <= 0.01 && h.outside_fraction <= 0.01 && deterministic;
    Ok((
        ok,
        format!(
            "max bin deviation {:.2e}, interval mass error {mass_error:.1e}, outside {:.1e}, deterministic {deterministic}",
            h.max_deviation, h.outside_fraction
        ),
    ))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "phase and discriminants", budget: Duration::from_secs(5), run: phase_suite },
        Criterion { id: 2, name: "mass identities", budget: Duration::from_secs(30), run: mass_identities },
        Criterion { id: 3, name: "lambda jump relations", budget: Duration::from_secs(60), run: lambda_jumps },
        Criterion { id: 4, name: "real-part ordering near the support", budget: Duration::from_secs(60), run: lemma_ordering },
        Criterion { id: 5, name: "model problem certificate", budget: Duration::from_secs(10), run: model_certificate },
        Criterion { id: 6, name: "finite-n structure", budget: Duration::from_secs(300), run: finite_structure },
        Criterion { id: 7, name: "diagonal kernel vs density", budget: Duration::from_secs(600), run: density_limit },
        Criterion { id: 8, name: "bulk sine-kernel limit", budget: Duration::from_secs(600), run: bulk_limit },
        Criterion { id: 9, name: "edge Airy-kernel limit", budget: Duration::from_secs(600), run: edge_limit },
        Criterion { id: 10, name: "Monte Carlo density", budget: Duration::from_secs(300), run: monte_carlo },
    ];
    let mut failures = 0;
    for c in criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (passed, detail) = match outcome {
            Ok((ok, detail)) => (ok && elapsed <= c.budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {:>2} [{}] {}: {} ({:.2} s of {} s)",
            c.id,
            if passed { "PASS" } else { "FAIL" },
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
