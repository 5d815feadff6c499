//! Airy function `Ai` and its derivative on the real line.
//!
//! Maclaurin series near the origin, steepest-descent integrals at moderate
//! distance and the classical asymptotic expansions far out.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::quadrature::{integrate, QuadOptions};

const AI0: f64 = 0.355_028_053_887_817_24;
const AIP0: f64 = -0.258_819_403_792_806_8;
const SERIES_RADIUS: f64 = 2.0;
const ASYMPTOTIC_RADIUS: f64 = 9.0;

/// `(Ai(x), Ai'(x))`.
pub fn airy(x: f64) -> (f64, f64) {
    if x.abs() <= SERIES_RADIUS {
        maclaurin(x)
    } else if x.abs() >= ASYMPTOTIC_RADIUS {
        if x > 0.0 {
            asymptotic_right(x)
        } else {
            asymptotic_left(-x)
        }
    } else if x > 0.0 {
        saddle_right(x)
    } else {
        ray_left(x)
    }
}

pub fn airy_ai(x: f64) -> f64 {
    airy(x).0
}

pub fn airy_ai_prime(x: f64) -> f64 {
    airy(x).1
}

fn maclaurin(x: f64) -> (f64, f64) {
    let cube = x * x * x;
    // f = sum c_k x^{3k}, g = sum d_k x^{3k+1}
    let (mut f, mut g) = (1.0, x);
    let (mut df, mut dg) = (0.0, 1.0);
    let (mut c, mut d) = (1.0, 1.0);
    let mut power = 1.0; // x^{3(k-1)}
    for k in 1..80 {
        let kf = k as f64;
        c /= (3.0 * kf - 1.0) * (3.0 * kf);
        d /= (3.0 * kf) * (3.0 * kf + 1.0);
        let next = power * cube;
        let tf = c * next;
        let tg = d * next * x;
        f += tf;
        g += tg;
        df += 3.0 * kf * c * power * x * x;
        dg += (3.0 * kf + 1.0) * d * next;
        power = next;
        if tf.abs() <= 1e-18 * f.abs() && tg.abs() <= 1e-18 * g.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    (AI0 * f + AIP0 * g, AI0 * df + AIP0 * dg)
}

fn quad_opts() -> QuadOptions {
    QuadOptions::with_tol(1e-12, 0.0)
}

/// Contour through the saddle `sqrt(x)`:
/// `Ai(x) = exp(-zeta)/pi int_0^inf exp(-sqrt(x) u^2) cos(u^3/3) du`.
fn saddle_right(x: f64) -> (f64, f64) {
    let root = x.sqrt();
    let zeta = 2.0 / 3.0 * x * root;
    let end = 7.0 / root.sqrt() + 1.0;
    let value = integrate(|u: f64| (-root * u * u).exp() * (u * u * u / 3.0).cos(), 0.0, end, quad_opts())
        .map(|r| r.value)
        .unwrap_or(f64::NAN);
    let slope = integrate(
        |u: f64| {
            let phase = u * u * u / 3.0;
            (-root * u * u).exp() * (root * phase.cos() + u * phase.sin())
        },
        0.0,
        end,
        quad_opts(),
    )
    .map(|r| r.value)
    .unwrap_or(f64::NAN);
    let scale = (-zeta).exp() / PI;
    (scale * value, -scale * slope)
}

/// `Ai(x) = Im U / pi`, `U = int_0^inf exp(-s^3/3 - x s e^{i pi/3}) e^{i pi/3} ds`.
fn ray_left(x: f64) -> (f64, f64) {
    let dir = Complex64::from_polar(1.0, FRAC_PI_3);
    let end = 2.0 * x.abs().sqrt() + 6.0;
    let integrand = |s: f64| (-(s * s * s) / 3.0 - x * s * dir).exp() * dir;
    let value = integrate(integrand, 0.0, end, quad_opts()).map(|r| r.value).unwrap_or(Complex64::new(f64::NAN, 0.0));
    let slope = integrate(|s: f64| -integrand(s) * (s * dir), 0.0, end, quad_opts())
        .map(|r| r.value)
        .unwrap_or(Complex64::new(f64::NAN, 0.0));
    (value.im / PI, slope.im / PI)
}

/// Coefficients `u_k` and `v_k` of the large-argument expansions.
fn expansion_coefficients(count: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(count);
    let mut u = 1.0;
    out.push((1.0, 1.0));
    for k in 1..count {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        out.push((u, -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u));
    }
    out
}

/// Terms `c_k / zeta^k` up to the smallest one.
fn truncated_terms(zeta: f64, pick: impl Fn((f64, f64)) -> f64) -> Vec<f64> {
    let coeffs = expansion_coefficients(60);
    let mut terms = Vec::new();
    let mut last = f64::INFINITY;
    for (k, &c) in coeffs.iter().enumerate() {
        let t = pick(c) / zeta.powi(k as i32);
        if t.abs() > last || t.abs() < 1e-18 {
            break;
        }
        last = t.abs();
        terms.push(t);
    }
    terms
}

fn asymptotic_right(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let alt = |terms: Vec<f64>| terms.iter().enumerate().map(|(k, t)| if k % 2 == 0 { *t } else { -t }).sum::<f64>();
    let su = alt(truncated_terms(zeta, |c| c.0));
    let sv = alt(truncated_terms(zeta, |c| c.1));
    let e = (-zeta).exp() / (2.0 * PI.sqrt());
    (e * su / x.powf(0.25), -e * x.powf(0.25) * sv)
}

/// Expansions for `Ai(-x)`, `x > 0`.
fn asymptotic_left(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let split = |terms: Vec<f64>| {
        let (mut even, mut odd) = (0.0, 0.0);
        for (k, t) in terms.iter().enumerate() {
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                even += sign * t;
            } else {
                odd += sign * t;
            }
        }
        (even, odd)
    };
    let (ue, uo) = split(truncated_terms(zeta, |c| c.0));
    let (ve, vo) = split(truncated_terms(zeta, |c| c.1));
    let phase = zeta - FRAC_PI_4;
    let (s, c) = phase.sin_cos();
    let root = PI.sqrt();
    let quarter = x.powf(0.25);
    let value = (c * ue + s * uo) / (root * quarter);
    let slope = quarter / root * (s * ve - c * vo);
    (value, slope)
}
