//! The quartic spectral curve
//! `xi^4 - z xi^3 + (1 - a^2) xi^2 + a^2 z xi - t a^2 = 0`,
//! its four labeled sheets, critical points, branch points and phase.

use nalgebra::{Matrix3, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::Tolerances;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Limit parameters: source eigenvalues `-a, 0, a` with fractions
/// `t1 = t3 = (1 - t) / 2` and `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub t: f64,
}

impl ModelParams {
    /// Any `a > 0`, `t` in `(0, 1)`.
    pub fn new(a: f64, t: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!("a must be positive and finite, got {a}")));
        }
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidParameter(format!("t must lie in (0, 1), got {t}")));
        }
        Ok(ModelParams { a, t })
    }

    /// Parameters in the three-cut regime `a^2 > 3`.
    pub fn three_cut(a: f64, t: f64) -> Result<Self> {
        let p = Self::new(a, t)?;
        if classify_phase(&p).phase != Phase::ThreeCut {
            return Err(Error::Phase { b: p.b(), t });
        }
        Ok(p)
    }

    pub fn b(&self) -> f64 {
        self.a * self.a
    }

    /// Weight of each outer source eigenvalue.
    pub fn outer_weight(&self) -> f64 {
        0.5 * (1.0 - self.t)
    }

    /// Source eigenvalues `[a, 0, -a]` in sheet order 2, 3, 4.
    pub fn sources(&self) -> [f64; 3] {
        [self.a, 0.0, -self.a]
    }

    /// Weights matching `sources`.
    pub fn weights(&self) -> [f64; 3] {
        let w = self.outer_weight();
        [w, self.t, w]
    }

    /// Monic quartic coefficients `[c0, c1, c2, c3]` at `z`.
    fn quartic_coefficients(&self, z: Complex64) -> [Complex64; 4] {
        let b = self.b();
        [Complex64::from(-self.t * b), z * b, Complex64::from(1.0 - b), -z]
    }

    pub fn quartic(&self, z: Complex64, xi: Complex64) -> Complex64 {
        let c = self.quartic_coefficients(z);
        (((xi + c[3]) * xi + c[2]) * xi + c[1]) * xi + c[0]
    }

    fn quartic_derivative(&self, z: Complex64, xi: Complex64) -> Complex64 {
        let c = self.quartic_coefficients(z);
        ((xi * 4.0 + c[3] * 3.0) * xi + c[2] * 2.0) * xi + c[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    ThreeCut,
    Boundary,
    Unsupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub b: f64,
    pub t: f64,
    pub delta: f64,
    pub delta_c: f64,
    pub delta_q: f64,
    pub phase: Phase,
}

/// Discriminant of the critical-point cubic and its factors.
pub fn discriminants(params: &ModelParams) -> PhaseReport {
    discriminants_at(params.b(), params.t)
}

/// Same as `discriminants`, keyed by `b` itself so that `b = 3` is exact.
pub fn discriminants_at(b: f64, t: f64) -> PhaseReport {
    let delta_c = 108.0 * b * t * t + (-9.0 * b * b - 90.0 * b - 9.0) * t + 8.0 * b.powi(3) - 15.0 * b * b
        + 6.0 * b
        + 1.0;
    let delta = (1.0 - t) * b * b * delta_c;
    let delta_q = -3.0 * (b - 3.0) * (5.0 * b + 1.0).powi(3);
    let tol = Tolerances::default().phase_boundary;
    let phase = if (b - 3.0).abs() <= tol {
        Phase::Boundary
    } else if b > 3.0 {
        Phase::ThreeCut
    } else {
        Phase::Unsupported
    };
    PhaseReport { b, t, delta, delta_c, delta_q, phase }
}

pub fn classify_phase(params: &ModelParams) -> PhaseReport {
    discriminants(params)
}

/// `z(xi) = xi + t1/(xi - a) + t/xi + t1/(xi + a)`.
pub fn evaluate_z_of_xi(params: &ModelParams, xi: Complex64) -> Result<Complex64> {
    let a = params.a;
    let scale = 1.0 + a;
    for pole in [0.0, a, -a] {
        if (xi - pole).norm() <= 1e-14 * scale {
            return Err(Error::PoleAtXi { re: xi.re, im: xi.im });
        }
    }
    let b = params.b();
    let xi2 = xi * xi;
    Ok((xi2 * xi2 + xi2 * (1.0 - b) - params.t * b) / (xi * (xi2 - b)))
}

/// First derivative `dz/dxi`.
pub fn z_prime(params: &ModelParams, xi: Complex64) -> Complex64 {
    let a = params.a;
    let w = params.outer_weight();
    Complex64::from(1.0) - w / ((xi - a) * (xi - a)) - params.t / (xi * xi) - w / ((xi + a) * (xi + a))
}

/// Second derivative `d^2 z / dxi^2`.
pub fn z_second(params: &ModelParams, xi: Complex64) -> Complex64 {
    let a = params.a;
    let w = params.outer_weight();
    let cube = |u: Complex64| u * u * u;
    (w / cube(xi - a) + params.t / cube(xi) + w / cube(xi + a)) * 2.0
}

/// `sum_j t_j / |xi - a_j|^2`; below one exactly on the first sheet's region.
pub fn attraction(params: &ModelParams, xi: Complex64) -> f64 {
    params
        .sources()
        .iter()
        .zip(params.weights())
        .map(|(&s, w)| w / (xi - s).norm_sqr())
        .sum()
}

/// How a point was approached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Above,
    Below,
    OffAxis,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Above => 1.0,
            Side::Below => -1.0,
            Side::OffAxis => 0.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Above => Side::Below,
            Side::Below => Side::Above,
            Side::OffAxis => Side::OffAxis,
        }
    }
}

/// The six endpoints of the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Edge {
    NegZ3,
    NegZ2,
    NegZ1,
    Z1,
    Z2,
    Z3,
}

impl Edge {
    pub const ALL: [Edge; 6] = [Edge::NegZ3, Edge::NegZ2, Edge::NegZ1, Edge::Z1, Edge::Z2, Edge::Z3];

    /// `+1` where the support lies to the left of the edge, `-1` otherwise.
    pub fn orientation(self) -> f64 {
        match self {
            Edge::Z3 | Edge::Z1 | Edge::NegZ2 => 1.0,
            Edge::Z2 | Edge::NegZ1 | Edge::NegZ3 => -1.0,
        }
    }

    /// Sheet that meets the first sheet at this edge.
    pub fn partner_sheet(self) -> usize {
        match self {
            Edge::Z2 | Edge::Z3 => 2,
            Edge::Z1 | Edge::NegZ1 => 3,
            Edge::NegZ2 | Edge::NegZ3 => 4,
        }
    }

    pub fn mirror(self) -> Edge {
        match self {
            Edge::NegZ3 => Edge::Z3,
            Edge::NegZ2 => Edge::Z2,
            Edge::NegZ1 => Edge::Z1,
            Edge::Z1 => Edge::NegZ1,
            Edge::Z2 => Edge::NegZ2,
            Edge::Z3 => Edge::NegZ3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Edge::NegZ3 => "-z3",
            Edge::NegZ2 => "-z2",
            Edge::NegZ1 => "-z1",
            Edge::Z1 => "z1",
            Edge::Z2 => "z2",
            Edge::Z3 => "z3",
        }
    }
}

impl std::str::FromStr for Edge {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Edge::ALL
            .into_iter()
            .find(|e| e.label() == s.trim())
            .ok_or_else(|| format!("unknown edge `{s}` (expected one of z1, z2, z3, -z1, -z2, -z3)"))
    }
}

/// Critical points, branch points and edge constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportData {
    pub y_roots: [f64; 3],
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    /// Edge constants indexed like `Edge::ALL`.
    pub rho_edge: [f64; 6],
}

impl SupportData {
    /// The closed support intervals, left to right.
    pub fn intervals(&self) -> [(f64, f64); 3] {
        [(-self.z3, -self.z2), (-self.z1, self.z1), (self.z2, self.z3)]
    }

    pub fn edge_location(&self, edge: Edge) -> f64 {
        match edge {
            Edge::NegZ3 => -self.z3,
            Edge::NegZ2 => -self.z2,
            Edge::NegZ1 => -self.z1,
            Edge::Z1 => self.z1,
            Edge::Z2 => self.z2,
            Edge::Z3 => self.z3,
        }
    }

    pub fn edge_critical_point(&self, edge: Edge) -> f64 {
        match edge {
            Edge::NegZ3 => -self.r,
            Edge::NegZ2 => -self.q,
            Edge::NegZ1 => -self.p,
            Edge::Z1 => self.p,
            Edge::Z2 => self.q,
            Edge::Z3 => self.r,
        }
    }

    pub fn rho_edge(&self, edge: Edge) -> f64 {
        self.rho_edge[Edge::ALL.iter().position(|&e| e == edge).expect("edge listed")]
    }

    /// Index of the open interval containing `x`.
    pub fn open_interval(&self, x: f64) -> Option<usize> {
        self.intervals().iter().position(|&(lo, hi)| x > lo && x < hi)
    }

    pub fn in_closed_support(&self, x: f64) -> bool {
        self.intervals().iter().any(|&(lo, hi)| x >= lo && x <= hi)
    }

    /// Distance from `x` to the closed support.
    pub fn distance_to_support(&self, x: f64) -> f64 {
        self.intervals()
            .iter()
            .map(|&(lo, hi)| if x < lo { lo - x } else if x > hi { x - hi } else { 0.0 })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Roots `y1 < y2 < y3` of the critical-point cubic
/// `y^3 - (1 + 2b) y^2 + (b^2 + (3t - 1) b) y - t b^2`.
pub fn cubic_coefficients(params: &ModelParams) -> [f64; 3] {
    let b = params.b();
    [-(1.0 + 2.0 * b), b * b + (3.0 * params.t - 1.0) * b, -params.t * b * b]
}

fn cubic_eval(c: &[f64; 3], y: f64) -> f64 {
    ((y + c[0]) * y + c[1]) * y + c[2]
}

/// Critical points of `z(xi)` on the positive axis. Only `y_roots`, `p`, `q`, `r`
/// are filled; the branch points are left at zero.
pub fn critical_points(params: &ModelParams) -> Result<SupportData> {
    if classify_phase(params).phase != Phase::ThreeCut {
        return Err(Error::Phase { b: params.b(), t: params.t });
    }
    let c = cubic_coefficients(params);
    let (bb, cc, dd) = (c[0], c[1], c[2]);
    let shift = bb / 3.0;
    let p_dep = cc - bb * bb / 3.0;
    let q_dep = 2.0 * bb.powi(3) / 27.0 - bb * cc / 3.0 + dd;
    if p_dep >= 0.0 {
        return Err(Error::Phase { b: params.b(), t: params.t });
    }
    let m = 2.0 * (-p_dep / 3.0).sqrt();
    let arg = (3.0 * q_dep / (2.0 * p_dep) * (-3.0 / p_dep).sqrt()).clamp(-1.0, 1.0);
    let phi = arg.acos() / 3.0;
    let mut y: [f64; 3] = std::array::from_fn(|k| {
        m * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift
    });
    for root in y.iter_mut() {
        for _ in 0..3 {
            let f = cubic_eval(&c, *root);
            let df = (3.0 * *root + 2.0 * c[0]) * *root + c[1];
            if df != 0.0 {
                let step = f / df;
                if step.is_finite() {
                    *root -= step;
                }
            }
        }
    }
    y.sort_by(f64::total_cmp);
    if !(y[0] > 0.0 && y[0] < y[1] && y[1] < y[2]) {
        return Err(Error::Phase { b: params.b(), t: params.t });
    }
    Ok(SupportData {
        y_roots: y,
        p: y[0].sqrt(),
        q: y[1].sqrt(),
        r: y[2].sqrt(),
        z1: 0.0,
        z2: 0.0,
        z3: 0.0,
        rho_edge: [0.0; 6],
    })
}

/// Eigenvalues of the companion matrix of the critical-point cubic.
pub fn cubic_companion_roots(params: &ModelParams) -> [Complex64; 3] {
    let c = cubic_coefficients(params);
    let m = Matrix3::new(0.0, 0.0, -c[2], 1.0, 0.0, -c[1], 0.0, 1.0, -c[0]);
    let ev = m.complex_eigenvalues();
    [ev[0], ev[1], ev[2]]
}

/// Critical points, branch points `z1 < z2 < z3` and edge constants.
pub fn branch_points(params: &ModelParams) -> Result<SupportData> {
    let mut s = critical_points(params)?;
    let z = |xi: f64| evaluate_z_of_xi(params, Complex64::from(xi)).map(|v| v.re);
    s.z1 = z(s.p)?;
    s.z2 = z(s.q)?;
    s.z3 = z(s.r)?;
    if !(0.0 < s.z1 && s.z1 < s.z2 && s.z2 < s.z3) {
        return Err(Error::OrderingViolation([s.z1, s.z2, s.z3]));
    }
    for (k, edge) in Edge::ALL.into_iter().enumerate() {
        let d2 = z_second(params, Complex64::from(s.edge_critical_point(edge))).re.abs();
        if d2 < 1e-10 {
            return Err(Error::DegenerateEdge(d2));
        }
        s.rho_edge[k] = (2.0 / d2).sqrt();
    }
    Ok(s)
}

/// The four labeled roots at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheetValues {
    pub z: Complex64,
    pub side: Side,
    pub xi: [Complex64; 4],
    /// Largest `|quartic(xi_j)|` over the four roots.
    pub residual: f64,
}

impl SheetValues {
    /// Sheet `j` in `1..=4`.
    pub fn sheet(&self, j: usize) -> Complex64 {
        self.xi[j - 1]
    }
}

/// Spectral curve in the three-cut phase with its support data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub params: ModelParams,
    pub support: SupportData,
    pub tol: Tolerances,
}

impl SpectralCurve {
    pub fn new(params: ModelParams) -> Result<Self> {
        let support = branch_points(&params)?;
        Ok(SpectralCurve { params, support, tol: Tolerances::default() })
    }

    pub fn from_a_t(a: f64, t: f64) -> Result<Self> {
        Self::new(ModelParams::three_cut(a, t)?)
    }

    pub fn z3(&self) -> f64 {
        self.support.z3
    }

    /// Unlabeled roots of the quartic, Newton-polished.
    pub fn quartic_roots(&self, z: Complex64) -> Result<[Complex64; 4]> {
        let c = self.params.quartic_coefficients(z);
        let mut roots: [Complex64; 4] = if z.im == 0.0 {
            let m = Matrix4::new(
                0.0, 0.0, 0.0, -c[0].re, //
                1.0, 0.0, 0.0, -c[1].re, //
                0.0, 1.0, 0.0, -c[2].re, //
                0.0, 0.0, 1.0, -c[3].re,
            );
            let schur = nalgebra::Schur::try_new(m, f64::EPSILON, 10_000)
                .ok_or_else(|| self.root_failure(z, "Schur iteration did not converge"))?;
            let ev = schur.complex_eigenvalues();
            [ev[0], ev[1], ev[2], ev[3]]
        } else {
            let zero = Complex64::new(0.0, 0.0);
            let one = Complex64::new(1.0, 0.0);
            let m = Matrix4::new(
                zero, zero, zero, -c[0], //
                one, zero, zero, -c[1], //
                zero, one, zero, -c[2], //
                zero, zero, one, -c[3],
            );
            let schur = nalgebra::Schur::try_new(m, f64::EPSILON, 10_000)
                .ok_or_else(|| self.root_failure(z, "Schur iteration did not converge"))?;
            let ev = schur
                .eigenvalues()
                .ok_or_else(|| self.root_failure(z, "Schur form not triangular"))?;
            [ev[0], ev[1], ev[2], ev[3]]
        };
        for root in roots.iter_mut() {
            self.polish(z, root);
        }
        if z.im == 0.0 {
            // keep real roots real and complex roots in conjugate pairs
            for root in roots.iter_mut() {
                if root.im.abs() <= 1e-13 * (1.0 + root.re.abs()) {
                    root.im = 0.0;
                }
            }
        }
        let bound = self.tol.root_residual * z.norm().powi(4).max(1.0);
        let worst = roots.iter().map(|&x| self.params.quartic(z, x).norm()).fold(0.0, f64::max);
        if !(worst <= bound) {
            return Err(self.root_failure(z, &format!("residual {worst:e} above {bound:e}")));
        }
        Ok(roots)
    }

    fn polish(&self, z: Complex64, root: &mut Complex64) {
        let mut f = self.params.quartic(z, *root);
        for _ in 0..4 {
            let df = self.params.quartic_derivative(z, *root);
            if df.norm() == 0.0 {
                break;
            }
            let cand = *root - f / df;
            let fc = self.params.quartic(z, cand);
            if fc.norm() < f.norm() {
                *root = cand;
                f = fc;
            } else {
                break;
            }
        }
    }

    fn root_failure(&self, z: Complex64, reason: &str) -> Error {
        Error::RootSolve { re: z.re, im: z.im, reason: reason.to_string() }
    }

    /// True when `z` is close enough to the real axis to be treated as a
    /// boundary value.
    fn near_axis(&self, z: Complex64) -> bool {
        z.im.abs() <= self.tol.axis_band * (1.0 + z.re.abs())
    }

    /// Labeled sheets at `z`. Points on a cut need `Side::Above` or `Side::Below`.
    ///
    /// Labels come from the regions of the `xi`-plane: the first sheet is the
    /// root with `attraction < 1`, equivalently the one whose imaginary part has
    /// the sign of `Im z`; the other three occupy disjoint vertical strips around
    /// `a`, `0`, `-a` and are ordered by real part.
    pub fn solve_sheets(&self, z: Complex64, side: Side) -> Result<SheetValues> {
        let (point, side) = if self.near_axis(z) {
            let x = z.re;
            let on_cut = self.support.open_interval(x).is_some();
            let side = match side {
                Side::OffAxis if on_cut && z.im == 0.0 => return Err(Error::OnCut { re: x, im: 0.0 }),
                Side::OffAxis if on_cut => {
                    if z.im > 0.0 {
                        Side::Above
                    } else {
                        Side::Below
                    }
                }
                Side::OffAxis => Side::OffAxis,
                s => s,
            };
            (Complex64::from(x), side)
        } else {
            (z, Side::OffAxis)
        };
        let roots = self.quartic_roots(point)?;
        let xi = if point.im != 0.0 {
            self.label_off_axis(point, roots)
        } else if self.support.open_interval(point.re).is_some() {
            self.label_on_cut(roots, side)
        } else {
            self.label_in_gap(roots)
        };
        let residual = xi.iter().map(|&x| self.params.quartic(point, x).norm()).fold(0.0, f64::max);
        Ok(SheetValues { z, side, xi, residual })
    }

    /// Sheets at a real point, as a boundary value from `side` when on a cut.
    pub fn sheets_at_real(&self, x: f64, side: Side) -> Result<SheetValues> {
        self.solve_sheets(Complex64::from(x), side)
    }

    /// Single sheet value.
    pub fn sheet(&self, z: Complex64, j: usize, side: Side) -> Result<Complex64> {
        Ok(self.solve_sheets(z, side)?.sheet(j))
    }

    fn label_off_axis(&self, z: Complex64, roots: [Complex64; 4]) -> [Complex64; 4] {
        let sign = z.im.signum();
        let first = (0..4)
            .max_by(|&i, &j| (sign * roots[i].im).total_cmp(&(sign * roots[j].im)))
            .expect("four roots");
        Self::assemble(roots, first)
    }

    fn label_on_cut(&self, roots: [Complex64; 4], side: Side) -> [Complex64; 4] {
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&i, &j| roots[j].im.abs().total_cmp(&roots[i].im.abs()));
        let (u, v) = (order[0], order[1]);
        let mut roots = roots;
        let first = if roots[u].im == 0.0 && roots[v].im == 0.0 {
            // coalesced pair at resolution: pick the one inside the first region
            let pick = if attraction(&self.params, roots[u]) <= attraction(&self.params, roots[v]) { u } else { v };
            pick
        } else {
            let want = if side == Side::Below { -1.0 } else { 1.0 };
            // enforce exact conjugacy of the pair
            let re = 0.5 * (roots[u].re + roots[v].re);
            let im = 0.5 * (roots[u].im.abs() + roots[v].im.abs());
            roots[u] = Complex64::new(re, im * roots[u].im.signum());
            roots[v] = Complex64::new(re, im * roots[v].im.signum());
            if roots[u].im * want > 0.0 {
                u
            } else {
                v
            }
        };
        Self::assemble(roots, first)
    }

    fn label_in_gap(&self, roots: [Complex64; 4]) -> [Complex64; 4] {
        let real = roots.map(|r| Complex64::from(r.re));
        let first = (0..4)
            .min_by(|&i, &j| attraction(&self.params, real[i]).total_cmp(&attraction(&self.params, real[j])))
            .expect("four roots");
        Self::assemble(real, first)
    }

    fn assemble(roots: [Complex64; 4], first: usize) -> [Complex64; 4] {
        let mut rest: Vec<Complex64> = (0..4).filter(|&k| k != first).map(|k| roots[k]).collect();
        rest.sort_by(|x, y| y.re.total_cmp(&x.re));
        [roots[first], rest[0], rest[1], rest[2]]
    }

    /// Anchor of the continuation path, where labels follow the large-`z`
    /// asymptotics.
    pub fn anchor(&self) -> f64 {
        10.0 * (1.0 + self.params.a)
    }

    /// Sheets at `z` obtained by tracking the roots from the anchor along
    /// `anchor -> anchor + i h -> Re z + i h -> z`, matching nearest neighbours
    /// and halving the step on near-collisions. Real targets on a cut are
    /// reached at `x + i sign * eps`.
    pub fn continue_sheets(&self, z: Complex64, side: Side) -> Result<SheetValues> {
        match self.continue_path(z, side, 1e-6 * (1.0 + self.params.a)) {
            Ok(v) => Ok(v),
            Err(_) => self.continue_path(z, side, 1e-3 * (1.0 + self.params.a)),
        }
    }

    fn continue_path(&self, z: Complex64, side: Side, lift: f64) -> Result<SheetValues> {
        let eps = 1e-9 * (1.0 + self.support.z3);
        let sign = if z.im != 0.0 {
            z.im.signum()
        } else if side == Side::Below {
            -1.0
        } else {
            1.0
        };
        let target = if z.im == 0.0 && self.support.open_interval(z.re).is_some() {
            if side == Side::OffAxis {
                return Err(Error::OnCut { re: z.re, im: 0.0 });
            }
            Complex64::new(z.re, sign * eps)
        } else {
            z
        };
        let h = sign * lift.max(target.im.abs());
        let z0 = Complex64::from(self.anchor());
        let waypoints = [z0, z0 + I * h, Complex64::new(target.re, h), target];
        let mut current = self.asymptotic_labels(z0)?;
        for w in waypoints.windows(2) {
            current = self.track_segment(w[0], w[1], current)?;
        }
        let residual = current.iter().map(|&x| self.params.quartic(target, x).norm()).fold(0.0, f64::max);
        Ok(SheetValues { z, side: if z.im == 0.0 { side } else { Side::OffAxis }, xi: current, residual })
    }

    fn asymptotic_labels(&self, z0: Complex64) -> Result<[Complex64; 4]> {
        let roots = self.quartic_roots(z0)?;
        let a = self.params.a;
        let expected = [z0, Complex64::from(a), Complex64::from(0.0), Complex64::from(-a)];
        Ok(Self::match_roots(&expected, &roots).0)
    }

    fn match_roots(previous: &[Complex64; 4], roots: &[Complex64; 4]) -> ([Complex64; 4], f64) {
        let mut best = ([Complex64::new(0.0, 0.0); 4], f64::INFINITY);
        let mut perm = [0usize, 1, 2, 3];
        permutations(&mut perm, 0, &mut |p| {
            let cost = (0..4).map(|k| (previous[k] - roots[p[k]]).norm()).fold(0.0, f64::max);
            if cost < best.1 {
                best = (std::array::from_fn(|k| roots[p[k]]), cost);
            }
        });
        best
    }

    fn track_segment(&self, from: Complex64, to: Complex64, start: [Complex64; 4]) -> Result<[Complex64; 4]> {
        if from == to {
            return Ok(start);
        }
        let length = (to - from).norm();
        let mut s = 0.0;
        let mut step = (length / 200.0).max(1e-4).min(length);
        let mut current = start;
        while s < length {
            let ds = step.min(length - s);
            let z = from + (to - from) * ((s + ds) / length);
            let roots = self.quartic_roots(z)?;
            let sep = min_separation(&roots);
            if sep < self.tol.root_collision {
                return Err(Error::ContinuationFailure(format!("roots collide near z = {z}")));
            }
            let (next, moved) = Self::match_roots(&current, &roots);
            if moved > 0.3 * sep {
                step = ds * 0.5;
                if step < 1e-13 * length.max(1.0) {
                    return Err(Error::ContinuationFailure(format!("step underflow near z = {z}")));
                }
                continue;
            }
            current = next;
            s += ds;
            if moved < 0.05 * sep {
                step = (step * 1.5).min(length / 20.0);
            }
        }
        Ok(current)
    }
}

fn min_separation(r: &[Complex64; 4]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..4 {
        for j in i + 1..4 {
            m = m.min((r[i] - r[j]).norm());
        }
    }
    m
}

fn permutations(p: &mut [usize; 4], k: usize, f: &mut impl FnMut(&[usize; 4])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, f);
        p.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> SpectralCurve {
        SpectralCurve::from_a_t(2.0, 0.5).unwrap()
    }

    #[test]
    fn delta_c_value() {
        let r = discriminants(&ModelParams::new(2.0, 0.5).unwrap());
        assert!((r.delta_c - 148.5).abs() < 1e-12);
        assert_eq!(r.phase, Phase::ThreeCut);
    }

    #[test]
    fn phase_thresholds() {
        let b3 = ModelParams::new(3f64.sqrt(), 0.3).unwrap();
        let r = classify_phase(&b3);
        assert_eq!(r.phase, Phase::Boundary);
        assert!(r.delta_q.abs() < 1e-9);
        assert_eq!(classify_phase(&ModelParams::new(2f64.sqrt(), 0.3).unwrap()).phase, Phase::Unsupported);
        assert!(matches!(ModelParams::three_cut(1.0, 0.5), Err(Error::Phase { .. })));
    }

    #[test]
    fn cubic_vieta() {
        let p = ModelParams::new(2.0, 0.5).unwrap();
        let s = critical_points(&p).unwrap();
        let sum: f64 = s.y_roots.iter().sum();
        let prod: f64 = s.y_roots.iter().product();
        assert!((sum - 9.0).abs() < 1e-10 * 9.0);
        assert!((prod - 8.0).abs() < 1e-10 * 8.0);
    }

    #[test]
    fn branch_points_ordered_and_match_scan() {
        let c = curve();
        let s = c.support;
        assert!(0.0 < s.z1 && s.z1 < s.z2 && s.z2 < s.z3);
        // brute-force scan of z on the real line near each critical point
        let z = |x: f64| evaluate_z_of_xi(&c.params, Complex64::from(x)).unwrap().re;
        let scan = |c0: f64, minimize: bool| {
            let mut best = z(c0 - 0.01);
            let mut x = c0 - 0.01;
            while x <= c0 + 0.01 {
                let v = z(x);
                if (minimize && v < best) || (!minimize && v > best) {
                    best = v;
                }
                x += 1e-6;
            }
            best
        };
        assert!((scan(s.p, true) - s.z1).abs() < 1e-9);
        assert!((scan(s.q, false) - s.z2).abs() < 1e-9);
        assert!((scan(s.r, true) - s.z3).abs() < 1e-9);
    }

    #[test]
    fn z_of_xi_examples() {
        let c = curve();
        let z = evaluate_z_of_xi(&c.params, Complex64::from(1e6)).unwrap();
        assert!(((z.re - 1e6) / 1e6).abs() < 1e-11);
        // xi = 1: (1 - 3 - 2) / (1 - 4) = 4/3
        let z1 = evaluate_z_of_xi(&c.params, Complex64::from(1.0)).unwrap();
        assert!((z1.re - 4.0 / 3.0).abs() < 1e-14);
        assert!(matches!(
            evaluate_z_of_xi(&c.params, Complex64::from(2.0)),
            Err(Error::PoleAtXi { .. })
        ));
    }

    #[test]
    fn large_z_asymptotics() {
        let c = curve();
        let z = Complex64::new(100.0, 1e-3);
        let s = c.solve_sheets(z, Side::OffAxis).unwrap();
        assert!((s.sheet(1) - (z - 1.0 / z)).norm() < 1e-5);
        assert!((s.sheet(3) - 0.5 / z).norm() < 1e-3 / z.norm());
        assert!((s.sheet(2) - (2.0 + 0.25 / z)).norm() < 1e-3);
        assert!((s.sheet(4) - (-2.0 + 0.25 / z)).norm() < 1e-3);
    }

    #[test]
    fn cut_partition() {
        let c = curve();
        let s = c.support;
        let mid = 0.5 * (s.z2 + s.z3);
        let v = c.sheets_at_real(mid, Side::Above).unwrap();
        assert!(v.sheet(1).im > 0.0);
        assert!((v.sheet(2) - v.sheet(1).conj()).norm() < 1e-12);
        assert_eq!(v.sheet(3).im, 0.0);
        assert_eq!(v.sheet(4).im, 0.0);
        let center = c.sheets_at_real(0.3 * s.z1, Side::Below).unwrap();
        assert!(center.sheet(1).im < 0.0);
        assert!((center.sheet(3) - center.sheet(1).conj()).norm() < 1e-12);
        assert!(matches!(c.sheets_at_real(mid, Side::OffAxis), Err(Error::OnCut { .. })));
        let gap = c.sheets_at_real(0.5 * (s.z1 + s.z2), Side::OffAxis).unwrap();
        assert!(gap.xi.iter().all(|x| x.im == 0.0));
    }

    #[test]
    fn continuation_agrees_with_labels() {
        let c = curve();
        let s = c.support;
        let points = [
            (Complex64::new(0.7, 0.4), Side::OffAxis),
            (Complex64::new(-2.1, -0.3), Side::OffAxis),
            (Complex64::new(0.5 * (s.z2 + s.z3), 0.0), Side::Above),
            (Complex64::new(0.2, 0.0), Side::Below),
            (Complex64::new(-0.5 * (s.z2 + s.z3), 0.0), Side::Above),
            (Complex64::new(0.5 * (s.z1 + s.z2), 0.0), Side::OffAxis),
        ];
        for (z, side) in points {
            let direct = c.solve_sheets(z, side).unwrap();
            let tracked = c.continue_sheets(z, side).unwrap();
            for j in 0..4 {
                assert!((direct.xi[j] - tracked.xi[j]).norm() < 1e-4, "z={z} sheet {}", j + 1);
            }
        }
    }

    #[test]
    fn companion_oracle_agrees_with_trig_roots() {
        let p = ModelParams::new(2.5, 0.3).unwrap();
        let s = critical_points(&p).unwrap();
        let mut ev: Vec<f64> = cubic_companion_roots(&p).iter().map(|c| c.re).collect();
        ev.sort_by(f64::total_cmp);
        for k in 0..3 {
            assert!((ev[k] - s.y_roots[k]).abs() < 1e-9 * s.y_roots[2]);
        }
    }
}
