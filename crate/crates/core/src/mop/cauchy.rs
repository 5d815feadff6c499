//! Cauchy transforms `C(P w_j)(z) = (1/2 pi i) int P(s) w_j(s) / (s - z) ds`.
//!
//! Two independent evaluations of the reduced transform
//! `exp(-n a_j^2 / 2) C(P w_j)`:
//!
//! * moment recursion `I_k = m_{k-1} / (2 pi i) + z I_{k-1}` started from the
//!   Faddeeva function, then summed against the coefficients of `P`;
//! * a ray integral in the Fourier variable,
//!   `sqrt(n / 2 pi) int_0^inf exp(n(i(z - a_j) s - s^2/2)) (-i s)^{m_j}
//!   prod_{l != j} (a_j - a_l - i s)^{m_l} ds`, which only needs the
//!   multi-index and stays accurate for large `n`.
//!
//! Both are evaluated for `Im z >= 0`; below the axis
//! `C(z) = -conj(C(conj z))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::faddeeva::{faddeeva, faddeeva_derivative};
use super::family::MopFamily;
use super::moments::gaussian_moments;
use super::{FiniteSizeParams, Index};
use crate::error::{Error, Result};
use crate::profile::Tolerances;
use crate::quadrature::{integrate, QuadOptions};
use crate::spectral_curve::Side;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CauchyMethod {
    /// Moment recursion, falling back to the ray integral when the recursion
    /// loses too many digits.
    #[default]
    Auto,
    MomentRecursion,
    FourierRay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyValue {
    pub value: Complex64,
    pub derivative: Option<Complex64>,
    /// Sum of magnitudes of the combined terms over the magnitude of the
    /// result.
    pub cancellation: f64,
    pub method: CauchyMethod,
}

impl CauchyValue {
    fn reflect(self) -> Self {
        CauchyValue { value: -self.value.conj(), derivative: self.derivative.map(|d| -d.conj()), ..self }
    }

    fn scaled(self, factor: f64) -> Self {
        CauchyValue { value: self.value * factor, derivative: self.derivative.map(|d| d * factor), ..self }
    }
}

/// Whether `(z, side)` is reached through the reflection.
fn needs_reflection(z: Complex64, side: Side) -> Result<bool> {
    if z.im > 0.0 {
        Ok(false)
    } else if z.im < 0.0 {
        Ok(true)
    } else {
        match side {
            Side::Above => Ok(false),
            Side::Below => Ok(true),
            Side::OffAxis => Err(Error::OnCut { re: z.re, im: z.im }),
        }
    }
}

const ROTATIONS: [f64; 5] = [-0.5, -0.25, 0.0, 0.25, 0.5];
const TAIL_DROP: f64 = 45.0;

struct Ray {
    scaling: f64,
    shift: Complex64,
    power_self: f64,
    others: [(f64, f64); 2],
    rotation: Complex64,
}

impl Ray {
    fn exponent(&self, s: f64) -> Complex64 {
        let i = Complex64::i();
        let sigma = self.rotation * s;
        let mut e = self.scaling * (i * self.shift * sigma - 0.5 * sigma * sigma);
        if self.power_self > 0.0 {
            e += self.power_self * (-i * sigma).ln();
        }
        for &(gap, power) in &self.others {
            if power > 0.0 {
                e += power * (gap - i * sigma).ln();
            }
        }
        e
    }
}

/// Reduced transform of `P_index w_j` (`j` 0-based) by the ray integral.
pub fn reduced_cauchy_fourier(
    fp: &FiniteSizeParams,
    index: Index,
    j: usize,
    z: Complex64,
    side: Side,
    with_derivative: bool,
) -> Result<CauchyValue> {
    if needs_reflection(z, side)? {
        return Ok(fourier_upper(fp, index, j, z.conj(), with_derivative)?.reflect());
    }
    fourier_upper(fp, index, j, z, with_derivative)
}

fn fourier_upper(
    fp: &FiniteSizeParams,
    index: Index,
    j: usize,
    z: Complex64,
    with_derivative: bool,
) -> Result<CauchyValue> {
    let src = fp.sources();
    let n = fp.scaling();
    let others: Vec<(f64, f64)> = (0..3).filter(|&l| l != j).map(|l| (src[j] - src[l], index[l] as f64)).collect();
    let step = 0.25 / (n.sqrt() + n * (z - src[j]).norm());
    let mut best: Option<(f64, f64, Ray)> = None;
    for theta in ROTATIONS {
        let ray = Ray {
            scaling: n,
            shift: z - src[j],
            power_self: index[j] as f64,
            others: [others[0], others[1]],
            rotation: Complex64::from_polar(1.0, theta),
        };
        let mut logs = Vec::new();
        let mut peak = f64::NEG_INFINITY;
        let mut peak_at = 0.0;
        let mut k = 1usize;
        loop {
            let s = k as f64 * step;
            let e = ray.exponent(s).re;
            if e > peak {
                peak = e;
                peak_at = s;
            }
            logs.push(e);
            if s > peak_at && e < peak - TAIL_DROP && k >= 8 {
                break;
            }
            k += 1;
            if k > 400_000 {
                return Err(Error::QuadratureNonConvergence { error: f64::INFINITY, tolerance: 0.0 });
            }
        }
        let length = k as f64 * step;
        let l1_ln = peak + (step * logs.iter().map(|e| (e - peak).exp()).sum::<f64>()).ln();
        if best.as_ref().is_none_or(|b| l1_ln < b.0) {
            best = Some((l1_ln, length, ray));
        }
    }
    let (l1_ln, length, ray) = best.expect("at least one rotation");
    let period = 2.0 * PI / (n * (ray.shift.norm() + 1.0));
    let width = period.min(1.0 / n.sqrt());
    let panels = ((length / width).ceil() as usize).max(1);
    let prefactor = (n / (2.0 * PI)).sqrt();
    let l1 = l1_ln.exp();
    let opts = QuadOptions { rel_tol: 1e-13, abs_tol: 1e-16 * l1 / panels as f64, max_intervals: 200 };
    let sum_panels = |weight: &dyn Fn(f64) -> Complex64| -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let lo = length * p as f64 / panels as f64;
            let hi = length * (p + 1) as f64 / panels as f64;
            total += integrate(|s: f64| ray.exponent(s).exp() * weight(s), lo, hi, opts)?.value;
        }
        Ok(total * ray.rotation)
    };
    let value = sum_panels(&|_| Complex64::new(1.0, 0.0))?;
    let derivative = if with_derivative {
        Some(sum_panels(&|s| Complex64::i() * n * ray.rotation * s)? * prefactor)
    } else {
        None
    };
    Ok(CauchyValue {
        value: value * prefactor,
        derivative,
        cancellation: l1 / value.norm().max(f64::MIN_POSITIVE),
        method: CauchyMethod::FourierRay,
    })
}

/// Reduced transform of `P w_j` (`j` 0-based) by the moment recursion.
pub fn reduced_cauchy_recursion(
    fp: &FiniteSizeParams,
    family: &MopFamily,
    j: usize,
    z: Complex64,
    side: Side,
    tol: &Tolerances,
) -> Result<CauchyValue> {
    let flip = needs_reflection(z, side)?;
    let zu = if flip { z.conj() } else { z };
    let n = fp.scaling();
    let degree = family.degree();
    let mu = gaussian_moments(fp, j, degree);
    let mass = (2.0 * PI / n).sqrt();
    let root = (0.5 * n).sqrt();
    let zeta = root * (zu - fp.sources()[j]);
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let mut ik = 0.5 * faddeeva(zeta);
    let mut dk = 0.5 * root * faddeeva_derivative(zeta);
    let mut bound = ik.norm();
    let mut value = family.coeffs[0] * ik;
    let mut derivative = family.coeffs[0] * dk;
    let mut magnitude = family.coeffs[0].abs() * bound;
    for k in 1..=degree {
        dk = ik + zu * dk;
        ik = mass * mu[k - 1] / two_pi_i + zu * ik;
        bound = mass * mu[k - 1].abs() / (2.0 * PI) + zu.norm() * bound;
        value += family.coeffs[k] * ik;
        derivative += family.coeffs[k] * dk;
        magnitude += family.coeffs[k].abs() * bound;
    }
    let cancellation = magnitude / value.norm().max(f64::MIN_POSITIVE);
    let estimate = f64::EPSILON * cancellation;
    if estimate > tol.cancellation_budget {
        return Err(Error::PrecisionLoss { estimate });
    }
    let out = CauchyValue { value, derivative: Some(derivative), cancellation, method: CauchyMethod::MomentRecursion };
    Ok(if flip { out.reflect() } else { out })
}

/// `C(P w_j)(z)` for the family's polynomial, `j` in `1..=3`.
pub fn cauchy_transform(
    fp: &FiniteSizeParams,
    family: &MopFamily,
    j: usize,
    z: Complex64,
    side: Side,
    method: CauchyMethod,
) -> Result<CauchyValue> {
    if !(1..=3).contains(&j) {
        return Err(Error::InvalidParameter(format!("weight index {j} outside 1..=3")));
    }
    let tol = Tolerances::default();
    let reduced = match method {
        CauchyMethod::MomentRecursion => reduced_cauchy_recursion(fp, family, j - 1, z, side, &tol)?,
        CauchyMethod::FourierRay => reduced_cauchy_fourier(fp, family.index, j - 1, z, side, true)?,
        CauchyMethod::Auto => match reduced_cauchy_recursion(fp, family, j - 1, z, side, &tol) {
            Err(Error::PrecisionLoss { .. }) => reduced_cauchy_fourier(fp, family.index, j - 1, z, side, true)?,
            other => other?,
        },
    };
    let aj = fp.sources()[j - 1];
    Ok(reduced.scaled((0.5 * fp.scaling() * aj * aj).exp()))
}
