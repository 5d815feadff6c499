//! One function per subcommand, each producing a JSON result, an optional
//! CSV table and the named checks it asserted.

use extsource_core::asymptotics::{
    bulk_limit_check, diagonal_density_check, edge_limit_check, product_grid, LimitCheckReport, LimitContext, BULK_GRID,
    EDGE_GRID,
};
use extsource_core::density::{edge_constants, masses, rho};
use extsource_core::ensemble_mc::{edge_statistics, empirical_density, sample_eigenvalues, EnsembleConfig};
use extsource_core::lambda_functions::LambdaFunctions;
use extsource_core::model_rhp::{max_abs, CMatrix4, ModelRhp};
use extsource_core::mop::{
    assemble_y, mop_build_with, trace_identity, verify_ode, verify_recurrence, verify_y_jump, FiniteKernel,
};
use extsource_core::spectral_curve::classify_phase;
use extsource_core::{Complex64, Edge, ModelParams, Side, SpectralCurve, Tolerances};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, ConfigError, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    /// `value <= bound`.
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, passed: value <= bound }
    }

    fn holds(name: &str, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, bound: 1.0, passed: ok }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }
}

/// Round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Runtime(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<extsource_core::Error> for RunError {
    fn from(e: extsource_core::Error) -> Self {
        RunError::Runtime(e.to_string())
    }
}

pub struct Artifact {
    pub result: Value,
    pub table: Option<Table>,
    pub checks: Vec<Check>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable report")
}

fn curve(cfg: &RunConfig) -> Result<SpectralCurve, RunError> {
    let params = ModelParams::three_cut(cfg.a, cfg.t).map_err(|e| RunError::Config(e.into()))?;
    Ok(SpectralCurve::new(params)?)
}

pub fn run(cfg: &RunConfig) -> Result<Artifact, RunError> {
    match cfg.command {
        Command::Phase => phase(cfg),
        Command::Support => support(cfg),
        Command::Density => density(cfg),
        Command::Sample => sample(cfg),
        Command::Kernel => kernel(cfg),
        Command::Limits => limits(cfg),
        Command::Verify => verify(cfg),
    }
}

fn phase(cfg: &RunConfig) -> Result<Artifact, RunError> {
    let params = ModelParams::new(cfg.a, cfg.t).map_err(|e| RunError::Config(e.into()))?;
    Ok(Artifact { result: to_value(&classify_phase(&params)), table: None, checks: Vec::new() })
}

fn support(cfg: &RunConfig) -> Result<Artifact, RunError> {
    let c = curve(cfg)?;
    let edges: Vec<Value> =
        edge_constants(&c.support).into_iter().map(|(e, r)| json!({"edge": e.label(), "location": c.support.edge_location(e), "rho_edge": r})).collect();
    let result = json!({"support": to_value(&c.support), "intervals": c.support.intervals(), "edges": edges});
    Ok(Artifact { result, table: None, checks: Vec::new() })
}

fn density_grid(cfg: &RunConfig, c: &SpectralCurve) -> Vec<f64> {
    cfg.grid.clone().unwrap_or_else(|| {
        let half = c.support.z3 + 0.5;
        let count = cfg.points.max(2);
        (0..count).map(|k| -half + 2.0 * half * k as f64 / (count - 1) as f64).collect()
    })
}

fn density(cfg: &RunConfig) -> Result<Artifact, RunError> {
    let c = curve(cfg)?;
    let xs = density_grid(cfg, &c);
    let values = xs.par_iter().map(|&x| rho(&c, x)).collect::<Result<Vec<_>, _>>()?;
    let m = masses(&c)?;
    let expected = [(1.0 - cfg.t) / 2.0, cfg.t, (1.0 - cfg.t) / 2.0];
    let mass_error = m.iter().zip(expected).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    let mut table = Table::new(&["x", "rho", "in_support"]);
    for v in &values {
        table.rows.push(vec![num(v.x), num(v.rho), v.in_support.to_string()]);
    }
    let result = json!({"masses": m, "expected_masses": expected, "support": c.support.intervals(), "points": values.len()});
    Ok(Artifact { result, table: Some(table), checks: vec![Check::at_most("mass_identities", mass_error, 1e-8)] })
}

fn sample(cfg: &RunConfig) -> Result<Artifact, RunError> {
    let c = curve(cfg)?;
    let fp = cfg.finite_size()?;
    let ens = EnsembleConfig::new(&fp, cfg.seed, cfg.draws);
    let samples = sample_eigenvalues(&ens)?;
    let hist = empirical_density(&samples, &c, cfg.bin_width)?;
    let edge = edge_statistics(&samples, &c.support, cfg.edge.unwrap_or(Edge::Z3));
    let mut header = vec!["draw".to_string(), "stream".to_string()];
    header.extend((1..=fp.n).map(|k| format!("lambda_{k}")));
    let rows = samples
        .iter()
        .map(|s| {
            let mut row = vec![s.draw_index.to_string(), s.stream.to_string()];
            row.extend(s.eigenvalues.iter().map(|&x| num(x)));
            row
        })
        .collect();
    let total: f64 = hist.empirical.iter().sum();
    let checks = vec![
        Check::at_most("histogram_normalized", (total - 1.0).abs(), 1e-12),
        Check::holds("no_retried_draws", samples.iter().all(|s| !s.retried)),
    ];
    let result = json!({
        "histogram": to_value(&hist),
        "edge_statistics": {"edge": edge.edge.label(), "mean": edge.mean, "variance": edge.variance, "draws": edge.rescaled.len()},
    });
    Ok(Artifact { result, table: Some(Table { header, rows }), checks })
}

fn kernel(cfg: &RunConfig) -> Result<Artifact, RunError> {
    let c = curve(cfg)?;
    let fp = cfg.finite_size()?;
    let lambda = LambdaFunctions::new(c)?;
    let k = FiniteKernel::with_lambda(fp, lambda);
    let xs = cfg.grid.clone().unwrap_or_else(|| {
        let z3 = c.support.z3;
        (0..9).map(|i| -z3 + 2.0 * z3 * i as f64 / 8.0).collect()
    });
    let pairs: Vec<(f64, f64)> = xs.iter().flat_map(|&x| xs.iter().map(move |&y| (x, y))).collect();
    let evals = pairs.par_iter().map(|&(x, y)| k.eval(x, y)).collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["x", "y", "kn", "hat_kn", "imaginary_part"]);
    let mut worst_imag: f64 = 0.0;
    for e in &evals {
        worst_imag = worst_imag.max(e.imaginary_part.abs() / e.kn.abs().max(1.0));
        table.rows.push(vec![num(e.x), num(e.y), num(e.kn), e.hat_kn.map(num).unwrap_or_default(), num(e.imaginary_part)]);
    }
    let diagonal: Vec<Value> = evals.iter().filter(|e| e.x == e.y).map(|e| json!({"x": e.x, "kn_over_n": e.kn / fp.n as f64})).collect();
    let result = json!({"finite_size": to_value(&fp), "pairs": evals.len(), "diagonal": diagonal});
    Ok(Artifact { result, table: Some(table), checks: vec![Check::at_most("kernel_real", worst_imag, 1e-6)] })
}

fn surface_rows(table: &mut Table, label: &str, r: &LimitCheckReport) {
    for (row, &n) in r.finite.iter().zip(&r.n_list) {
        for ((&(u, v), f), l) in r.grid.iter().zip(row).zip(&r.limit) {
            table.rows.push(vec![label.to_string(), n.to_string(), num(u), num(v), num(*f), num(*l)]);
        }
    }
}

fn limits(cfg: &RunConfig) -> Result<Artifact, RunError> {
    curve(cfg)?;
    let ctx = LimitContext::new(cfg.a, cfg.t)?;
    let sizes = &cfg.sizes;
    for &n in sizes {
        ctx.finite_size(n).map_err(|e| RunError::Config(e.into()))?;
    }
    let mut table = Table::new(&["check", "n", "u", "v", "scaled_kernel", "limit"]);
    let mut checks = Vec::new();
    let mut bulk = Vec::new();
    let mids = ctx.bulk_midpoints();
    let bulk_grid = product_grid(cfg.grid.as_deref().unwrap_or(&BULK_GRID));
    for x0 in [mids[1], mids[2]] {
        let r = bulk_limit_check(&ctx, sizes, x0, &bulk_grid)?;
        let label = format!("bulk x0={x0:.6}");
        surface_rows(&mut table, &label, &r);
        checks.push(Check::holds(&format!("{label} nonincreasing"), r.is_nonincreasing(0.1)));
        bulk.push(r);
    }
    let edges = match cfg.edge {
        Some(e) => vec![e],
        None => vec![Edge::Z3, Edge::Z1],
    };
    let edge_grid = product_grid(cfg.grid.as_deref().unwrap_or(&EDGE_GRID));
    let mut edge_reports = Vec::new();
    for e in edges {
        let r = edge_limit_check(&ctx, sizes, e, &edge_grid)?;
        let label = format!("edge {}", e.label());
        surface_rows(&mut table, &label, &r);
        checks.push(Check::holds(&format!("{label} nonincreasing"), r.is_nonincreasing(0.1)));
        edge_reports.push(r);
    }
    let z3 = ctx.curve.support.z3;
    let diag = diagonal_density_check(&ctx, sizes, &mids, &[z3 + 0.5, -z3 - 0.5], &[Edge::Z3, Edge::Z2, Edge::Z1])?;
    let result = json!({"bulk": bulk, "edge": edge_reports, "diagonal": to_value(&diag)});
    Ok(Artifact { result, table: Some(table), checks })
}

fn verify(cfg: &RunConfig) -> Result<Artifact, RunError> {
    let c = curve(cfg)?;
    let fp = cfg.finite_size()?;
    let s = c.support;
    let mut checks = vec![Check::holds("branch_points_ordered", 0.0 < s.z1 && s.z1 < s.z2 && s.z2 < s.z3)];

    let m = masses(&c)?;
    let expected = [(1.0 - cfg.t) / 2.0, cfg.t, (1.0 - cfg.t) / 2.0];
    checks.push(Check::at_most("mass_identities", m.iter().zip(expected).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max), 1e-8));

    let lambda = LambdaFunctions::new(c)?;
    checks.push(Check::at_most("lambda_jumps", lambda.check_jump_relations(20)?.max_residual(), 1e-8));
    let mut violations = 0;
    for interval in 0..3 {
        for factor in [1e-2, 1e-3] {
            violations += lambda.check_lemma_ordering(interval, factor * (s.z3 - s.z2), 20)?.violations.len();
        }
    }
    checks.push(Check::at_most("real_part_ordering_violations", violations as f64, 0.0));

    let model = ModelRhp::new(c);
    checks.push(Check::at_most("model_jumps", model.verify_jumps(20)?.max_residual(), 1e-9));
    let identity = CMatrix4::identity();
    checks.push(Check::at_most("model_value_table", max_abs(&(model.value_table() - identity)), 1e-8));
    let far = model.solution(Complex64::new(0.0, 1e4), Side::OffAxis)?;
    checks.push(Check::at_most("model_normalization", max_abs(&(far.m - identity)), 1e-3));

    let fam = mop_build_with(&fp, fp.index(), cfg.precision, &Tolerances::default())?;
    checks.push(Check::at_most("orthogonality", fam.orthogonality_residual, 1e-8));
    let off_axis = [Complex64::new(0.4, 0.9), Complex64::new(-2.3, 0.5), Complex64::new(3.1, -0.7)];
    let mut det: f64 = 0.0;
    let mut ode: f64 = 0.0;
    let mut rec: f64 = 0.0;
    for z in off_axis {
        det = det.max(assemble_y(&fp, z, Side::OffAxis)?.det_residual);
        ode = ode.max(verify_ode(&fp, z)?);
        rec = rec.max(verify_recurrence(&fp, fp.index(), z)?);
    }
    let real_points: Vec<f64> = (0..10).map(|k| -(s.z3 + 0.5) + (2.0 * s.z3 + 1.0) * k as f64 / 9.0).collect();
    checks.push(Check::at_most("y_determinant", det, 1e-9));
    checks.push(Check::at_most("y_jump", verify_y_jump(&fp, &real_points)?, 1e-8));
    checks.push(Check::at_most("ode", ode, 1e-7));
    checks.push(Check::at_most("recurrence", rec, 1e-7));
    checks.push(Check::at_most("trace", trace_identity(&fp)?.relative_error, 1e-6));
    let result = json!({
        "finite_size": to_value(&fp),
        "moment_solve": {"precision": fam.precision, "condition": fam.condition},
    });
    Ok(Artifact { result, table: None, checks })
}

