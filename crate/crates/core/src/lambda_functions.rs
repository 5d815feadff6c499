//! Antiderivatives `lambda_j(z) = int xi_j` of the four sheets, their
//! normalization constants, jump relations and real-part ordering.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_sqrt_ends, QuadOptions};
use crate::spectral_curve::{Edge, Side, SpectralCurve};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaValues {
    pub z: Complex64,
    pub side: Side,
    pub lambda: [Complex64; 4],
    pub l_const: [Complex64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HFunction {
    pub x: f64,
    pub h: f64,
}

/// Path integrals of the sheets.
///
/// `lambda_1` and `lambda_2` vanish at `z3`; `lambda_3(z1) = lambda_1+(z1)`;
/// `lambda_4(-z2) = lambda_1+(-z2)`. Each integral runs from its anchor
/// vertically to height `elevation` (sign chosen by the target's half-plane or
/// side), horizontally, then vertically down to the target.
#[derive(Debug, Clone)]
pub struct LambdaFunctions {
    pub curve: SpectralCurve,
    pub elevation: f64,
    opts: QuadOptions,
    anchor_z1: Complex64,
    anchor_neg_z2: Complex64,
}

impl LambdaFunctions {
    pub fn new(curve: SpectralCurve) -> Result<Self> {
        Self::with_elevation(curve, 0.1 * (1.0 + curve.support.z3))
    }

    pub fn with_elevation(curve: SpectralCurve, elevation: f64) -> Result<Self> {
        if !(elevation > 0.0) {
            return Err(Error::Domain(format!("path elevation must be positive, got {elevation}")));
        }
        let mut lf = LambdaFunctions {
            curve,
            elevation,
            opts: QuadOptions::with_tol(1e-13, 1e-13),
            anchor_z1: Complex64::new(0.0, 0.0),
            anchor_neg_z2: Complex64::new(0.0, 0.0),
        };
        let s = curve.support;
        lf.anchor_z1 = lf.lambda(Complex64::from(s.z1), 1, Side::Above)?;
        lf.anchor_neg_z2 = lf.lambda(Complex64::from(-s.z2), 1, Side::Above)?;
        Ok(lf)
    }

    fn anchor(&self, sheet: usize) -> (f64, Complex64) {
        let s = self.curve.support;
        match sheet {
            1 | 2 => (s.z3, Complex64::new(0.0, 0.0)),
            3 => (s.z1, self.anchor_z1),
            4 => (-s.z2, self.anchor_neg_z2),
            _ => unreachable!("sheet index checked by caller"),
        }
    }

    /// `lambda_j(z)`, `j` in `1..=4`. Real `z` is read from `side`
    /// (`OffAxis` means from above).
    pub fn lambda(&self, z: Complex64, sheet: usize, side: Side) -> Result<Complex64> {
        if !(1..=4).contains(&sheet) {
            return Err(Error::Domain(format!("sheet index {sheet} outside 1..=4")));
        }
        let (start, base) = self.anchor(sheet);
        let sign = if z.im != 0.0 {
            z.im.signum()
        } else if side == Side::Below {
            -1.0
        } else {
            1.0
        };
        let h = sign * self.elevation.max(z.im.abs());
        let path = [Complex64::from(start), Complex64::new(start, h), Complex64::new(z.re, h), z];
        let mut total = base;
        for seg in path.windows(2) {
            total += self.segment(seg[0], seg[1], sheet)?;
        }
        Ok(total)
    }

    fn segment(&self, from: Complex64, to: Complex64, sheet: usize) -> Result<Complex64> {
        if from == to {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let delta = to - from;
        let mut failure = None;
        let r = integrate_sqrt_ends(
            |s: f64| match self.curve.sheet(from + delta * s, sheet, Side::OffAxis) {
                Ok(v) => v * delta,
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            },
            0.0,
            1.0,
            self.opts,
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(r.value),
        }
    }

    pub fn values(&self, z: Complex64, side: Side) -> Result<LambdaValues> {
        let mut lambda = [Complex64::new(0.0, 0.0); 4];
        for (j, v) in lambda.iter_mut().enumerate() {
            *v = self.lambda(z, j + 1, side)?;
        }
        Ok(LambdaValues { z, side, lambda, l_const: self.integration_constants()? })
    }

    /// Constants `l_j` of the large-`z` expansions
    /// `lambda_1 = z^2/2 - ln z + l_1`, `lambda_2 = a z + t1 ln z + l_2`,
    /// `lambda_3 = t ln z + l_3`, `lambda_4 = -a z + t1 ln z + l_4`.
    ///
    /// `l_j = lambda_j(R) - lead_j(R) + int_R^inf (xi_j - lead_j')`, with the
    /// tail integrated in the `xi`-plane where `s = z(xi)` is explicit.
    pub fn integration_constants(&self) -> Result<[Complex64; 4]> {
        let p = self.curve.params;
        let a = p.a;
        let w = p.outer_weight();
        let radius = 2.0 * (1.0 + self.curve.support.z3);
        let primitive = |sheet: usize, s: f64| -> f64 {
            match sheet {
                1 => 0.5 * s * s - s.ln(),
                2 => a * s + w * s.ln(),
                3 => p.t * s.ln(),
                _ => -a * s + w * s.ln(),
            }
        };
        let at_radius = self.curve.sheets_at_real(radius, Side::OffAxis)?;
        let opts = QuadOptions::with_tol(1e-14, 1e-16);
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for (k, l) in out.iter_mut().enumerate() {
            let sheet = k + 1;
            let xi_r = at_radius.sheet(sheet).re;
            let tail = if sheet == 1 {
                integrate_sqrt_ends(|v| first_sheet_tail(&p, v), 0.0, 1.0 / xi_r, opts)?.value
            } else {
                let j = sheet - 2;
                integrate_sqrt_ends(|e| finite_sheet_tail(&p, j, e), 0.0, xi_r - p.sources()[j], opts)?.value
            };
            let tail = if sheet == 1 { tail } else { -tail };
            *l = self.lambda(Complex64::from(radius), sheet, Side::Above)? - primitive(sheet, radius) + tail;
        }
        Ok(out)
    }

    /// `h(x) = -x^2/4 + Re int_{z1}^x xi_1+` for `x` in the open support.
    pub fn h_function(&self, x: f64) -> Result<HFunction> {
        if self.curve.support.open_interval(x).is_none() {
            return Err(Error::Domain(format!("h is defined on the open support; x = {x}")));
        }
        Ok(HFunction { x, h: self.h_extended(x)? })
    }

    /// `h` continued off the support by integrating the mean of the first
    /// sheet and the sheet it meets at the nearest edge; inside the support
    /// this mean is `Re xi_1+`.
    pub fn h_extended(&self, x: f64) -> Result<f64> {
        let s = self.curve.support;
        let mut breaks: Vec<f64> = Edge::ALL.iter().map(|&e| s.edge_location(e)).collect();
        breaks.extend([0.5 * (s.z1 + s.z2), -0.5 * (s.z1 + s.z2)]);
        let (lo, hi, sign) = if x >= s.z1 { (s.z1, x, 1.0) } else { (x, s.z1, -1.0) };
        let mut knots = vec![lo];
        let mut inner: Vec<f64> = breaks.into_iter().filter(|&b| b > lo && b < hi).collect();
        inner.sort_by(f64::total_cmp);
        knots.extend(inner);
        knots.push(hi);
        let mut total = 0.0;
        let mut failure = None;
        for w in knots.windows(2) {
            total += integrate_sqrt_ends(
                |u| match self.mean_real_sheet(u) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                w[0],
                w[1],
                QuadOptions::with_tol(1e-13, 1e-14),
            )?
            .value;
        }
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(-0.25 * x * x + sign * total)
    }

    fn mean_real_sheet(&self, x: f64) -> Result<f64> {
        let s = self.curve.support;
        let sheets = self.curve.sheets_at_real(x, Side::Above)?;
        if s.open_interval(x).is_some() {
            return Ok(sheets.sheet(1).re);
        }
        let nearest = Edge::ALL
            .into_iter()
            .min_by(|&e1, &e2| (s.edge_location(e1) - x).abs().total_cmp(&(s.edge_location(e2) - x).abs()))
            .expect("six edges");
        Ok(0.5 * (sheets.sheet(1).re + sheets.sheet(nearest.partner_sheet()).re))
    }

    /// Evaluate all seven jump relations at `n_samples` points each.
    pub fn check_jump_relations(&self, n_samples: usize) -> Result<JumpReport> {
        let mut relations = Vec::new();
        for rel in JumpRelation::ALL {
            let (lo, hi) = rel.sample_window(&self.curve);
            let mut max_residual: f64 = 0.0;
            let mut worst_x = lo;
            for k in 0..n_samples {
                let x = lo + (hi - lo) * (k as f64 + 0.5) / n_samples as f64;
                if let Some(r) = self.relation_residual(rel, x)? {
                    if r > max_residual {
                        max_residual = r;
                        worst_x = x;
                    }
                }
            }
            relations.push(RelationResidual {
                relation: rel.description().to_string(),
                window: (lo, hi),
                samples: n_samples,
                max_residual,
                worst_x,
            });
        }
        Ok(JumpReport { relations })
    }

    /// Residual of one relation at `x`, or `None` when `x` is outside the
    /// relation's interval.
    pub fn relation_residual(&self, rel: JumpRelation, x: f64) -> Result<Option<f64>> {
        let (lo, hi) = rel.interval(&self.curve);
        if !(x >= lo && x <= hi) {
            return Ok(None);
        }
        let t = self.curve.params.t;
        let z = Complex64::from(x);
        let up = |j| self.lambda(z, j, Side::Above);
        let down = |j| self.lambda(z, j, Side::Below);
        let pi_i = |c: f64| I * (c * PI);
        let r = match rel {
            JumpRelation::OuterRightCut => (up(1)? - down(2)?).norm().max((down(1)? - up(2)?).norm()),
            JumpRelation::SecondSheetLeft => (up(2)? - down(2)? - pi_i(1.0 - t)).norm(),
            JumpRelation::RightGap => (up(1)? - down(1)? + pi_i(1.0 - t)).norm(),
            JumpRelation::CenterCut => (up(1)? - down(3)?).norm().max((down(1)? - up(3)? - pi_i(1.0 - t)).norm()),
            JumpRelation::LeftGap => {
                (up(1)? - down(1)? + pi_i(1.0 + t)).norm().max((up(3)? - down(3)? - pi_i(2.0 * t)).norm())
            }
            JumpRelation::OuterLeftCut => (up(1)? - down(4)?).norm().max((down(1)? - up(4)? - pi_i(1.0 + t)).norm()),
            JumpRelation::FarLeft => {
                (up(1)? - down(1)? + pi_i(2.0)).norm().max((up(4)? - down(4)? - pi_i(1.0 - t)).norm())
            }
        };
        Ok(Some(r))
    }

    /// Margins `Re lambda_d - max_{j != d} Re lambda_j` at points
    /// `x +- i offset` over the open interval `interval` (0 left, 1 center,
    /// 2 right), where `d` is the sheet paired with the interval.
    pub fn check_lemma_ordering(&self, interval: usize, offset: f64, points: usize) -> Result<LemmaReport> {
        let (lo, hi) = *self
            .curve
            .support
            .intervals()
            .get(interval)
            .ok_or_else(|| Error::Domain(format!("interval index {interval} outside 0..3")))?;
        if !(offset > 0.0) {
            return Err(Error::Domain(format!("offset must be positive, got {offset}")));
        }
        let dominant = [4, 3, 2][interval];
        let mut margins = Vec::with_capacity(2 * points);
        for k in 0..points {
            let x = lo + (hi - lo) * (k as f64 + 0.5) / points as f64;
            for sign in [1.0, -1.0] {
                let z = Complex64::new(x, sign * offset);
                let mut re = [0.0; 4];
                for (j, v) in re.iter_mut().enumerate() {
                    *v = self.lambda(z, j + 1, Side::OffAxis)?.re;
                }
                let best_other = (1..=4).filter(|&j| j != dominant).map(|j| re[j - 1]).fold(f64::NEG_INFINITY, f64::max);
                margins.push(LemmaMargin { z, margin: re[dominant - 1] - best_other });
            }
        }
        let violations = margins.iter().filter(|m| !(m.margin > 0.0)).copied().collect();
        Ok(LemmaReport { interval, dominant_sheet: dominant, offset, margins, violations })
    }

    /// Central-difference derivative of `lambda_j` at an off-axis point.
    pub fn derivative_residual(&self, z: Complex64, sheet: usize, step: f64) -> Result<f64> {
        let fd = (self.lambda(z + step, sheet, Side::OffAxis)? - self.lambda(z - step, sheet, Side::OffAxis)?)
            / (2.0 * step);
        Ok((fd - self.curve.sheet(z, sheet, Side::OffAxis)?).norm())
    }
}

/// The seven boundary-value relations between the `lambda_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpRelation {
    /// `l1+ = l2-`, `l1- = l2+` on `[z2, z3]`.
    OuterRightCut,
    /// `l2+ - l2- = (1-t) pi i` on `(-inf, z2]`.
    SecondSheetLeft,
    /// `l1+ - l1- = -(1-t) pi i` on `[z1, z2]`.
    RightGap,
    /// `l1+ = l3-`, `l1- - l3+ = (1-t) pi i` on `[-z1, z1]`.
    CenterCut,
    /// `l1+ - l1- = -(1+t) pi i`, `l3+ - l3- = 2t pi i` on `[-z2, -z1]`.
    LeftGap,
    /// `l1+ = l4-`, `l1- - l4+ = (1+t) pi i` on `[-z3, -z2]`.
    OuterLeftCut,
    /// `l1+ - l1- = -2 pi i`, `l4+ - l4- = (1-t) pi i` on `(-inf, -z3]`.
    FarLeft,
}

impl JumpRelation {
    pub const ALL: [JumpRelation; 7] = [
        JumpRelation::OuterRightCut,
        JumpRelation::SecondSheetLeft,
        JumpRelation::RightGap,
        JumpRelation::CenterCut,
        JumpRelation::LeftGap,
        JumpRelation::OuterLeftCut,
        JumpRelation::FarLeft,
    ];

    pub fn interval(self, curve: &SpectralCurve) -> (f64, f64) {
        let s = curve.support;
        match self {
            JumpRelation::OuterRightCut => (s.z2, s.z3),
            JumpRelation::SecondSheetLeft => (f64::NEG_INFINITY, s.z2),
            JumpRelation::RightGap => (s.z1, s.z2),
            JumpRelation::CenterCut => (-s.z1, s.z1),
            JumpRelation::LeftGap => (-s.z2, -s.z1),
            JumpRelation::OuterLeftCut => (-s.z3, -s.z2),
            JumpRelation::FarLeft => (f64::NEG_INFINITY, -s.z3),
        }
    }

    /// Finite window used for sampling.
    pub fn sample_window(self, curve: &SpectralCurve) -> (f64, f64) {
        let (lo, hi) = self.interval(curve);
        let span = 1.0 + curve.support.z3;
        (if lo.is_finite() { lo } else { -curve.support.z3 - span }, hi)
    }

    pub fn description(self) -> &'static str {
        match self {
            JumpRelation::OuterRightCut => "l1+ = l2-, l1- = l2+ on [z2, z3]",
            JumpRelation::SecondSheetLeft => "l2+ - l2- = (1-t) pi i on (-inf, z2]",
            JumpRelation::RightGap => "l1+ - l1- = -(1-t) pi i on [z1, z2]",
            JumpRelation::CenterCut => "l1+ = l3-, l1- - l3+ = (1-t) pi i on [-z1, z1]",
            JumpRelation::LeftGap => "l1+ - l1- = -(1+t) pi i, l3+ - l3- = 2t pi i on [-z2, -z1]",
            JumpRelation::OuterLeftCut => "l1+ = l4-, l1- - l4+ = (1+t) pi i on [-z3, -z2]",
            JumpRelation::FarLeft => "l1+ - l1- = -2 pi i, l4+ - l4- = (1-t) pi i on (-inf, -z3]",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationResidual {
    pub relation: String,
    pub window: (f64, f64),
    pub samples: usize,
    pub max_residual: f64,
    pub worst_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpReport {
    pub relations: Vec<RelationResidual>,
}

impl JumpReport {
    pub fn max_residual(&self) -> f64 {
        self.relations.iter().map(|r| r.max_residual).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaMargin {
    pub z: Complex64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub interval: usize,
    pub dominant_sheet: usize,
    pub offset: f64,
    pub margins: Vec<LemmaMargin>,
    pub violations: Vec<LemmaMargin>,
}

impl LemmaReport {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min)
    }
}

/// Integrand of `int_R^inf (xi_1 - s + 1/s) ds` in `v = 1/xi`, rearranged
/// so that no leading terms cancel (uses `sum t_l = 1`, `sum t_l a_l = 0`).
fn first_sheet_tail(p: &crate::spectral_curve::ModelParams, v: f64) -> f64 {
    let mut s1 = 0.0;
    let mut t2 = 0.0;
    let mut d2 = 0.0;
    for (al, tl) in p.sources().iter().zip(p.weights()) {
        let den = 1.0 - al * v;
        s1 += tl / den;
        t2 += tl * al * al / den;
        d2 += tl / (den * den);
    }
    let dz = 1.0 - v * v * d2;
    -v * (t2 + s1 * s1) * dz / (1.0 + v * v * s1)
}

/// Integrand of `int_R^inf (xi_j - a_j - t_j/s) ds` in `e = xi - a_j`,
/// integrated from `0` to `e(R)`; `j` indexes `sources()`.
fn finite_sheet_tail(p: &crate::spectral_curve::ModelParams, j: usize, e: f64) -> f64 {
    let src = p.sources();
    let wts = p.weights();
    let aj = src[j];
    let tj = wts[j];
    let mut g = aj + e;
    let mut d2 = 0.0;
    for l in (0..3).filter(|&l| l != j) {
        let d = aj + e - src[l];
        g += wts[l] / d;
        d2 += wts[l] / (d * d);
    }
    g / (tj + e * g) * (e * e * (1.0 - d2) - tj)
}

/// Closed-form antiderivative `F(xi) = xi z(xi) - xi^2/2 - sum_j t_j ln(xi - a_j)`,
/// which satisfies `dF/dz = xi` along any sheet.
pub fn closed_form_primitive(curve: &SpectralCurve, xi: Complex64) -> Complex64 {
    let p = curve.params;
    let z = crate::spectral_curve::evaluate_z_of_xi(&p, xi).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let mut f = xi * z - xi * xi * 0.5;
    for (s, w) in p.sources().iter().zip(p.weights()) {
        f -= (xi - s).ln() * w;
    }
    f
}
