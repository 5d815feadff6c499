//! Adaptive Gauss–Kronrod (7/15) quadrature with helpers for square-root
//! endpoints and semi-infinite tails.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-12, abs_tol: 1e-14, max_intervals: 4000 }
    }
}

impl QuadOptions {
    pub fn with_tol(rel_tol: f64, abs_tol: f64) -> Self {
        QuadOptions { rel_tol, abs_tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel<T> {
    lo: f64,
    hi: f64,
    value: T,
    error: f64,
}

fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, lo: f64, hi: f64) -> (T, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let s = f(center - dx) + f(center + dx);
        kronrod = kronrod + s * WGK[i];
        if i % 2 == 1 {
            gauss = gauss + s * WG[i / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    ((kronrod), (kronrod - gauss).magnitude())
}

/// Integrate `f` over `[lo, hi]` adaptively.
pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: QuadOptions,
) -> Result<QuadResult<T>> {
    if lo == hi {
        return Ok(QuadResult { value: T::zero(), error: 0.0, evaluations: 0 });
    }
    let (v, e) = gk15(&mut f, lo, hi);
    let mut panels = vec![Panel { lo, hi, value: v, error: e }];
    let mut evaluations = 15;
    loop {
        let mut total = T::zero();
        let mut err = 0.0;
        for p in &panels {
            total = total + p.value;
            err += p.error;
        }
        let tol = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if err <= tol {
            return Ok(QuadResult { value: total, error: err, evaluations });
        }
        if panels.len() >= opts.max_intervals {
            return Err(Error::QuadratureNonConvergence { error: err, tolerance: tol });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("non-empty");
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.lo + p.hi);
        if mid <= p.lo || mid >= p.hi {
            // interval exhausted at machine resolution
            return Err(Error::QuadratureNonConvergence { error: err, tolerance: tol });
        }
        let (v1, e1) = gk15(&mut f, p.lo, mid);
        let (v2, e2) = gk15(&mut f, mid, p.hi);
        evaluations += 30;
        panels.push(Panel { lo: p.lo, hi: mid, value: v1, error: e1 });
        panels.push(Panel { lo: mid, hi: p.hi, value: v2, error: e2 });
    }
}

/// Integrate over `[lo, hi]` through `x = lo + (hi - lo) sin^2(theta)`,
/// which removes square-root behaviour at both ends.
pub fn integrate_sqrt_ends<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: QuadOptions,
) -> Result<QuadResult<T>> {
    let width = hi - lo;
    integrate(
        |theta: f64| {
            let s = theta.sin();
            f(lo + width * s * s) * (width * (2.0 * theta).sin())
        },
        0.0,
        std::f64::consts::FRAC_PI_2,
        opts,
    )
}

/// Integrate over `[start, inf)` through `s = start / u`, `start > 0`.
pub fn integrate_tail<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    start: f64,
    opts: QuadOptions,
) -> Result<QuadResult<T>> {
    assert!(start > 0.0, "tail start must be positive");
    integrate(
        |u: f64| {
            if u <= 0.0 {
                T::zero()
            } else {
                f(start / u) * (start / (u * u))
            }
        },
        0.0,
        1.0,
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x: f64| x.powi(5) - 2.0 * x, -1.0, 2.0, QuadOptions::default()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (4.0 - 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn semicircle_area() {
        let r = integrate_sqrt_ends(|x: f64| (1.0 - x * x).max(0.0).sqrt(), -1.0, 1.0, QuadOptions::default())
            .unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-13);
    }

    #[test]
    fn tail_of_inverse_square() {
        let r = integrate_tail(|s: f64| 1.0 / (s * s), 2.0, QuadOptions::default()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-13);
    }

    #[test]
    fn complex_oscillatory() {
        let r = integrate(|x: f64| Complex64::new(0.0, 5.0 * x).exp(), 0.0, 1.0, QuadOptions::default()).unwrap();
        let exact = (Complex64::new(0.0, 5.0).exp() - 1.0) / Complex64::new(0.0, 5.0);
        assert!((r.value - exact).norm() < 1e-13);
    }

    #[test]
    fn reports_non_convergence() {
        let opts = QuadOptions { max_intervals: 4, ..Default::default() };
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, opts);
        assert!(matches!(r, Err(Error::QuadratureNonConvergence { .. })));
    }
}
