//! Universal limiting kernels and the harness comparing rescaled finite-n
//! kernels against them.

mod airy;

pub use airy::{airy, airy_ai, airy_ai_prime};

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::rho;
use crate::error::{Error, Result};
use crate::lambda_functions::LambdaFunctions;
use crate::mop::{FiniteKernel, FiniteSizeParams};
use crate::spectral_curve::{Edge, SpectralCurve};

const DIAGONAL_GAP: f64 = 1e-8;

/// `sin(pi(u - v)) / (pi(u - v))`.
pub fn sine_kernel(u: f64, v: f64) -> f64 {
    let d = u - v;
    if d.abs() < DIAGONAL_GAP {
        return 1.0;
    }
    (PI * d).sin() / (PI * d)
}

/// `(Ai(u) Ai'(v) - Ai'(u) Ai(v)) / (u - v)`.
pub fn airy_kernel(u: f64, v: f64) -> f64 {
    let (au, du) = airy(u);
    if (u - v).abs() < DIAGONAL_GAP {
        return du * du - u * au * au;
    }
    let (av, dv) = airy(v);
    (au * dv - du * av) / (u - v)
}

/// Tensor grid `values x values`.
pub fn product_grid(values: &[f64]) -> Vec<(f64, f64)> {
    values.iter().flat_map(|&u| values.iter().map(move |&v| (u, v))).collect()
}

pub const BULK_GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
pub const EDGE_GRID: [f64; 4] = [-2.0, -1.0, 0.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScalingPoint {
    Bulk { x0: f64, rho: f64 },
    Edge { edge: Edge, location: f64, rho_edge: f64, orientation: f64 },
}

/// Which edge constant reproduces the Airy limit better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeConvention {
    /// The constant of the edge itself.
    ByEdgePoint,
    /// The constant of the edge paired under the index swap `z3 <-> z1`.
    IndexSwapped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionCheck {
    pub swapped_edge: Edge,
    pub swapped_rho_edge: f64,
    pub swapped_max_errors: Vec<f64>,
    pub matched: EdgeConvention,
}

/// Rescaled finite-n kernels against a limiting kernel on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCheckReport {
    pub a: f64,
    pub t: f64,
    pub n_list: Vec<usize>,
    pub point: ScalingPoint,
    pub grid: Vec<(f64, f64)>,
    /// One row per entry of `n_list`.
    pub finite: Vec<Vec<f64>>,
    pub limit: Vec<f64>,
    pub max_errors: Vec<f64>,
    pub convention: Option<ConventionCheck>,
}

impl LimitCheckReport {
    /// Nonincreasing max error along `n_list`, with relative slack on the
    /// first pair only.
    pub fn is_nonincreasing(&self, first_pair_slack: f64) -> bool {
        self.max_errors.windows(2).enumerate().all(|(i, w)| {
            let slack = if i == 0 { 1.0 + first_pair_slack } else { 1.0 };
            w[1] <= w[0] * slack
        })
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.max_errors.windows(2).all(|w| w[1] < w[0])
    }

    pub fn last_error(&self) -> f64 {
        *self.max_errors.last().unwrap_or(&f64::NAN)
    }
}

/// Curve, `h` and per-size kernels for one `(a, t)`.
#[derive(Debug, Clone)]
pub struct LimitContext {
    pub a: f64,
    pub t: f64,
    pub curve: SpectralCurve,
    pub lambda: LambdaFunctions,
}

impl LimitContext {
    pub fn new(a: f64, t: f64) -> Result<Self> {
        let curve = SpectralCurve::from_a_t(a, t)?;
        let lambda = LambdaFunctions::new(curve.clone())?;
        Ok(LimitContext { a, t, curve, lambda })
    }

    pub fn finite_size(&self, n: usize) -> Result<FiniteSizeParams> {
        FiniteSizeParams::from_t(self.a, self.t, n)
    }

    /// Midpoints of the three support intervals.
    pub fn bulk_midpoints(&self) -> [f64; 3] {
        self.curve.support.intervals().map(|(lo, hi)| 0.5 * (lo + hi))
    }

    /// `scale * exp(n(h(x) - h(y))) K_n(x, y)` at `x = map(u)`, `y = map(v)`.
    fn scaled_kernel(&self, n: usize, grid: &[(f64, f64)], map: impl Fn(f64) -> f64 + Sync, scale: f64) -> Result<Vec<f64>> {
        let fp = self.finite_size(n)?;
        let kernel = FiniteKernel::new(fp);
        let mut nodes: Vec<f64> = grid.iter().flat_map(|&(u, v)| [u, v]).collect();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let data = nodes
            .par_iter()
            .map(|&u| {
                let x = map(u);
                Ok((kernel.psi(x)?, self.lambda.h_extended(x)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let lookup = |u: f64| nodes.iter().position(|&w| w == u).expect("node listed");
        let nf = n as f64;
        Ok(grid
            .iter()
            .map(|&(u, v)| {
                let (px, hx) = &data[lookup(u)];
                let (py, hy) = &data[lookup(v)];
                let conj = if u == v { 1.0 } else { (nf * (hx - hy)).exp() };
                scale * conj * kernel.kernel(px, py)
            })
            .collect())
    }

    fn edge_values(&self, n_list: &[usize], edge: Edge, rho_edge: f64, grid: &[(f64, f64)]) -> Result<Vec<Vec<f64>>> {
        let location = self.curve.support.edge_location(edge);
        let orientation = edge.orientation();
        n_list
            .par_iter()
            .map(|&n| {
                let stretch = (rho_edge * n as f64).powf(2.0 / 3.0);
                self.scaled_kernel(n, grid, |u| location + orientation * u / stretch, 1.0 / stretch)
            })
            .collect()
    }
}

fn max_errors(finite: &[Vec<f64>], limit: &[f64]) -> Vec<f64> {
    finite
        .iter()
        .map(|row| row.iter().zip(limit).map(|(f, l)| (f - l).abs()).fold(0.0, f64::max))
        .collect()
}

fn check_grid(grid: &[(f64, f64)]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty comparison grid".into()));
    }
    Ok(())
}

/// `1/(n rho) hat K_n(x0 + u/(n rho), x0 + v/(n rho))` against the sine kernel.
pub fn bulk_limit_check(ctx: &LimitContext, n_list: &[usize], x0: f64, grid: &[(f64, f64)]) -> Result<LimitCheckReport> {
    check_grid(grid)?;
    if ctx.curve.support.open_interval(x0).is_none() {
        return Err(Error::Domain(format!("x0 = {x0} is not interior to the support")));
    }
    let density = rho(&ctx.curve, x0)?.rho;
    let finite = n_list
        .par_iter()
        .map(|&n| {
            let stretch = n as f64 * density;
            ctx.scaled_kernel(n, grid, |u| x0 + u / stretch, 1.0 / stretch)
        })
        .collect::<Result<Vec<_>>>()?;
    let limit: Vec<f64> = grid.iter().map(|&(u, v)| sine_kernel(u, v)).collect();
    Ok(LimitCheckReport {
        a: ctx.a,
        t: ctx.t,
        n_list: n_list.to_vec(),
        point: ScalingPoint::Bulk { x0, rho: density },
        grid: grid.to_vec(),
        max_errors: max_errors(&finite, &limit),
        finite,
        limit,
        convention: None,
    })
}

/// Edge paired with `edge` when the constants are indexed the other way
/// round (`z3 <-> z1`, `z2` fixed).
pub fn swapped_edge(edge: Edge) -> Edge {
    match edge {
        Edge::Z3 => Edge::Z1,
        Edge::Z1 => Edge::Z3,
        Edge::NegZ3 => Edge::NegZ1,
        Edge::NegZ1 => Edge::NegZ3,
        e => e,
    }
}

/// `(rho_e n)^{-2/3} hat K_n(e + s u/(rho_e n)^{2/3}, e + s v/(rho_e n)^{2/3})`
/// against the Airy kernel, with `s` pointing away from the support.
pub fn edge_limit_check(ctx: &LimitContext, n_list: &[usize], edge: Edge, grid: &[(f64, f64)]) -> Result<LimitCheckReport> {
    check_grid(grid)?;
    let support = ctx.curve.support;
    let rho_edge = support.rho_edge(edge);
    let finite = ctx.edge_values(n_list, edge, rho_edge, grid)?;
    let limit: Vec<f64> = grid.iter().map(|&(u, v)| airy_kernel(u, v)).collect();
    let errors = max_errors(&finite, &limit);

    let swapped = swapped_edge(edge);
    let swapped_rho = support.rho_edge(swapped);
    let swapped_errors = if swapped == edge {
        errors.clone()
    } else {
        max_errors(&ctx.edge_values(n_list, edge, swapped_rho, grid)?, &limit)
    };
    let matched = match (errors.last(), swapped_errors.last()) {
        (Some(own), Some(other)) if other < own => EdgeConvention::IndexSwapped,
        _ => EdgeConvention::ByEdgePoint,
    };
    Ok(LimitCheckReport {
        a: ctx.a,
        t: ctx.t,
        n_list: n_list.to_vec(),
        point: ScalingPoint::Edge { edge, location: support.edge_location(edge), rho_edge, orientation: edge.orientation() },
        grid: grid.to_vec(),
        finite,
        limit,
        max_errors: errors,
        convention: Some(ConventionCheck {
            swapped_edge: swapped,
            swapped_rho_edge: swapped_rho,
            swapped_max_errors: swapped_errors,
            matched,
        }),
    })
}

/// `(1/n) K_n(x, x)` along `n_list` at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalSeries {
    pub x: f64,
    pub rho: f64,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDiagonal {
    pub edge: Edge,
    pub series: DiagonalSeries,
    /// `value(n_i) / value(n_{i+1})`.
    pub shrink_ratios: Vec<f64>,
    /// `(n_{i+1} / n_i)^{1/3}`.
    pub expected_ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalDensityReport {
    pub a: f64,
    pub t: f64,
    pub n_list: Vec<usize>,
    pub interior: Vec<DiagonalSeries>,
    /// Largest interior error for each size.
    pub max_interior_errors: Vec<f64>,
    /// `max_error(n_{i+1}) / max_error(n_i)`.
    pub error_ratios: Vec<f64>,
    pub exterior: Vec<DiagonalSeries>,
    pub edges: Vec<EdgeDiagonal>,
}

impl DiagonalDensityReport {
    pub fn ratios_within(&self, lo: f64, hi: f64) -> bool {
        self.error_ratios.iter().all(|r| (lo..=hi).contains(r))
    }

    /// Largest exterior value at the largest size.
    pub fn exterior_last(&self) -> f64 {
        self.exterior.iter().filter_map(|s| s.values.last().copied()).fold(0.0, f64::max)
    }

    /// Every edge shrink ratio within `factor` of its `n^{-1/3}` prediction.
    pub fn edges_consistent(&self, factor: f64) -> bool {
        self.edges.iter().all(|e| {
            e.shrink_ratios.iter().zip(&e.expected_ratios).all(|(r, x)| *r >= x / factor && *r <= x * factor)
        })
    }
}

/// `(1/n) K_n(x, x)` against `rho(x)` at interior points, decay at exterior
/// points and the `n^{-1/3}` law at edges.
pub fn diagonal_density_check(
    ctx: &LimitContext,
    n_list: &[usize],
    interior: &[f64],
    exterior: &[f64],
    edges: &[Edge],
) -> Result<DiagonalDensityReport> {
    let edge_points: Vec<f64> = edges.iter().map(|&e| ctx.curve.support.edge_location(e)).collect();
    let points: Vec<f64> = interior.iter().chain(exterior).chain(&edge_points).copied().collect();
    let densities = points.iter().map(|&x| rho(&ctx.curve, x).map(|d| d.rho)).collect::<Result<Vec<_>>>()?;
    let table = n_list
        .par_iter()
        .map(|&n| {
            let kernel = FiniteKernel::new(ctx.finite_size(n)?);
            points.par_iter().map(|&x| kernel.diagonal(x).map(|k| k / n as f64)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let series = |idx: usize| {
        let values: Vec<f64> = table.iter().map(|row| row[idx]).collect();
        let errors = values.iter().map(|v| (v - densities[idx]).abs()).collect();
        DiagonalSeries { x: points[idx], rho: densities[idx], values, errors }
    };
    let interior_series: Vec<DiagonalSeries> = (0..interior.len()).map(series).collect();
    let max_interior_errors: Vec<f64> =
        (0..n_list.len()).map(|k| interior_series.iter().map(|s| s.errors[k]).fold(0.0, f64::max)).collect();
    let error_ratios = max_interior_errors.windows(2).map(|w| w[1] / w[0]).collect();
    let exterior_series = (interior.len()..interior.len() + exterior.len()).map(series).collect();
    let offset = interior.len() + exterior.len();
    let edges = edges
        .iter()
        .enumerate()
        .map(|(k, &edge)| {
            let s = series(offset + k);
            EdgeDiagonal {
                edge,
                shrink_ratios: s.values.windows(2).map(|w| w[0] / w[1]).collect(),
                expected_ratios: n_list.windows(2).map(|w| (w[1] as f64 / w[0] as f64).cbrt()).collect(),
                series: s,
            }
        })
        .collect();
    Ok(DiagonalDensityReport {
        a: ctx.a,
        t: ctx.t,
        n_list: n_list.to_vec(),
        interior: interior_series,
        max_interior_errors,
        error_ratios,
        exterior: exterior_series,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_kernel_values() {
        assert_eq!(sine_kernel(0.3, 0.3), 1.0);
        assert!(sine_kernel(1.5, 0.5).abs() < 1e-15);
        assert!(sine_kernel(-2.0, 1.0).abs() < 1e-15);
        assert!((sine_kernel(0.5, 0.0) - 2.0 / PI).abs() < 1e-15);
        assert_eq!(sine_kernel(0.2, 0.9), sine_kernel(0.9, 0.2));
    }

    #[test]
    fn airy_kernel_diagonal_and_symmetry() {
        let aip0 = airy_ai_prime(0.0);
        assert!((airy_kernel(0.0, 0.0) - aip0 * aip0).abs() < 1e-15);
        // limit oracle: Richardson on gaps 1e-4, 1e-5 (error is O(gap^2))
        for u in [-1.5, 0.0, 0.8] {
            let near = |d: f64| airy_kernel(u + d, u - d);
            let extrapolated = (100.0 * near(0.5e-5) - near(0.5e-4)) / 99.0;
            assert!((airy_kernel(u, u) - extrapolated).abs() < 1e-8, "u = {u}");
        }
        assert_eq!(airy_kernel(-1.0, 0.5), airy_kernel(0.5, -1.0));
        let (a1, d1) = airy(-1.0);
        let (a2, d2) = airy(0.5);
        assert_eq!(a1 * d2 - d1 * a2, -(a2 * d1 - d2 * a1));
    }

    #[test]
    fn swapped_edges_pair_up() {
        for e in Edge::ALL {
            assert_eq!(swapped_edge(swapped_edge(e)), e);
        }
        assert_eq!(swapped_edge(Edge::Z2), Edge::Z2);
    }

    #[test]
    fn bulk_limit_at_small_sizes() {
        let ctx = LimitContext::new(2.0, 0.5).unwrap();
        let x0 = ctx.bulk_midpoints()[1];
        let report = bulk_limit_check(&ctx, &[12, 24], x0, &product_grid(&BULK_GRID)).unwrap();
        let center = report.grid.iter().position(|&g| g == (0.0, 0.0)).unwrap();
        for row in &report.finite {
            assert!((row[center] - 1.0).abs() < 0.1);
        }
        assert!(report.max_errors.iter().all(|e| e.is_finite()));
    }

    #[test]
    fn mirror_edge_agrees() {
        let ctx = LimitContext::new(2.0, 0.5).unwrap();
        let grid = product_grid(&EDGE_GRID);
        let right = edge_limit_check(&ctx, &[6], Edge::Z3, &grid).unwrap();
        let left = edge_limit_check(&ctx, &[6], Edge::NegZ3, &grid).unwrap();
        for (r, l) in right.finite[0].iter().zip(&left.finite[0]) {
            assert!((r - l).abs() <= 1e-8 * r.abs().max(1e-2), "{r} vs {l}");
        }
    }

    #[test]
    fn rejects_points_off_the_support() {
        let ctx = LimitContext::new(2.0, 0.5).unwrap();
        let outside = ctx.curve.support.z3 + 0.3;
        assert!(bulk_limit_check(&ctx, &[6], outside, &product_grid(&BULK_GRID)).is_err());
    }
}
