//! Explicit solution `M(z)` of the model Riemann–Hilbert problem with
//! constant jumps on the three cuts, built from the sheets of the curve.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_curve::{ModelParams, Side, SpectralCurve};

pub type CMatrix4 = Matrix4<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `(c2, c3, c4)`.
pub fn model_constants(params: &ModelParams) -> (Complex64, Complex64, Complex64) {
    let outer = Complex64::new(0.0, -params.outer_weight().sqrt());
    (outer, Complex64::new(0.0, -params.t.sqrt()), outer)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSolution {
    pub z: Complex64,
    pub side: Side,
    pub m: CMatrix4,
}

/// Evaluator for the four row functions `M_k(xi)`.
#[derive(Debug, Clone, Copy)]
pub struct ModelRhp {
    pub curve: SpectralCurve,
    consts: (Complex64, Complex64, Complex64),
}

/// Principal square root, with real arguments read from below the axis.
fn sqrt_below(w: Complex64) -> Complex64 {
    if w.im == 0.0 && w.re < 0.0 {
        Complex64::new(0.0, -(-w.re).sqrt())
    } else {
        w.sqrt()
    }
}

impl ModelRhp {
    pub fn new(curve: SpectralCurve) -> Self {
        ModelRhp { curve, consts: model_constants(&curve.params) }
    }

    /// `sqrt((xi^2 - p^2)(xi^2 - q^2)(xi^2 - r^2))` with cuts on the upper
    /// boundary arcs of the bounded regions: sheets 2..4 take the opposite sign
    /// in the upper half-plane.
    fn root_factor(&self, xi: Complex64, sheet: usize) -> Complex64 {
        let s = self.curve.support;
        let pair = |u: f64, v: f64| sqrt_below(xi - u) * sqrt_below(xi - v);
        let value = pair(s.q, s.r) * pair(-s.p, s.p) * pair(-s.r, -s.q);
        if sheet != 1 && xi.im > 0.0 {
            -value
        } else {
            value
        }
    }

    /// Row function `M_k(xi)` evaluated on sheet `sheet`.
    pub fn row_function(&self, k: usize, xi: Complex64, sheet: usize) -> Complex64 {
        let a = self.curve.params.a;
        let (c2, c3, c4) = self.consts;
        let num = match k {
            1 => xi * (xi * xi - a * a),
            2 => c2 * xi * (xi + a),
            3 => c3 * (xi * xi - a * a),
            4 => c4 * xi * (xi - a),
            _ => panic!("row index {k} outside 1..=4"),
        };
        num / self.root_factor(xi, sheet)
    }

    pub fn solution(&self, z: Complex64, side: Side) -> Result<ModelSolution> {
        let s = self.curve.support;
        let radius = 1e-8 * (1.0 + s.z3);
        for e in [s.z1, s.z2, s.z3] {
            if (z - e).norm() < radius || (z + e).norm() < radius {
                return Err(Error::BranchPointSingularity(z.re));
            }
        }
        let sheets = self.curve.solve_sheets(z, side)?;
        let m = CMatrix4::from_fn(|k, j| self.row_function(k + 1, sheets.xi[j], j + 1));
        Ok(ModelSolution { z, side: sheets.side, m })
    }

    /// Constant jump on the cut containing `x`.
    pub fn jump_matrix(&self, cut: usize) -> CMatrix4 {
        let partner = [3usize, 2, 1][cut];
        let mut j = CMatrix4::identity();
        j[(0, 0)] = ZERO;
        j[(partner, partner)] = ZERO;
        j[(0, partner)] = ONE;
        j[(partner, 0)] = -ONE;
        j
    }

    /// `max |M+ - M- J|` at `n_samples` points of each cut, keeping
    /// `1e-6 z3` away from the edges.
    pub fn verify_jumps(&self, n_samples: usize) -> Result<ModelJumpReport> {
        let s = self.curve.support;
        let margin = 1e-6 * s.z3;
        let mut per_cut = Vec::new();
        for (cut, (lo, hi)) in s.intervals().into_iter().enumerate() {
            let jump = self.jump_matrix(cut);
            let mut worst: f64 = 0.0;
            for k in 0..n_samples {
                let frac = if n_samples == 1 { 0.5 } else { k as f64 / (n_samples - 1) as f64 };
                let x = lo + margin + (hi - lo - 2.0 * margin) * frac;
                let z = Complex64::from(x);
                let plus = self.solution(z, Side::Above)?.m;
                let minus = self.solution(z, Side::Below)?.m;
                worst = worst.max(max_abs(&(plus - minus * jump)));
            }
            per_cut.push(CutResidual { interval: (lo, hi), samples: n_samples, max_residual: worst });
        }
        Ok(ModelJumpReport { cuts: per_cut })
    }

    /// `M_k(xi_j(inf))` with `xi_1(inf) = inf`, `xi_2(inf) = a`,
    /// `xi_3(inf) = 0`, `xi_4(inf) = -a`. Should be the identity.
    pub fn value_table(&self) -> CMatrix4 {
        let a = self.curve.params.a;
        let points = [Complex64::from(1e12), Complex64::from(a), ZERO, Complex64::from(-a)];
        CMatrix4::from_fn(|k, j| self.row_function(k + 1, points[j], j + 1))
    }
}

pub fn max_abs(m: &CMatrix4) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutResidual {
    pub interval: (f64, f64),
    pub samples: usize,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelJumpReport {
    pub cuts: Vec<CutResidual>,
}

impl ModelJumpReport {
    pub fn max_residual(&self) -> f64 {
        self.cuts.iter().map(|c| c.max_residual).fold(0.0, f64::max)
    }
}
