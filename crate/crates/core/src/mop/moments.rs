//! Moments of the shifted Gaussian weights.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::FiniteSizeParams;
use crate::error::{Error, Result};

/// A moment stored as `sign * exp(log_abs)` so that it survives when the
/// value itself would overflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub log_abs: f64,
    pub sign: f64,
}

impl Moment {
    /// The plain value; infinite when it exceeds the float range.
    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.log_abs.exp()
        }
    }
}

/// `ln(exp(n a_j^2 / 2) sqrt(2 pi / n))`: the factor between the raw moments
/// `int s^k exp(-n(s^2/2 - a_j s)) ds` and the Gaussian moments.
pub fn moment_scale_ln(fp: &FiniteSizeParams, j: usize) -> f64 {
    let aj = fp.sources()[j];
    let n = fp.scaling();
    0.5 * n * aj * aj + 0.5 * (2.0 * std::f64::consts::PI / n).ln()
}

/// Gaussian moments `E[X^k]`, `X ~ N(a_j, 1/n)`, for `k = 0..=max_k`.
pub fn gaussian_moments(fp: &FiniteSizeParams, j: usize, max_k: usize) -> Vec<f64> {
    let aj = fp.sources()[j];
    let inv_n = 1.0 / fp.scaling();
    let mut mu = Vec::with_capacity(max_k + 1);
    mu.push(1.0);
    if max_k >= 1 {
        mu.push(aj);
    }
    for k in 2..=max_k {
        mu.push(aj * mu[k - 1] + (k - 1) as f64 * inv_n * mu[k - 2]);
    }
    mu
}

/// Exact Gaussian moments over the rationals.
pub(crate) fn gaussian_moments_exact(fp: &FiniteSizeParams, j: usize, max_k: usize) -> Vec<BigRational> {
    let aj = BigRational::from_float(fp.sources()[j]).expect("finite source");
    let inv_n = BigRational::new(BigInt::from(1), BigInt::from(fp.n));
    let mut mu = Vec::with_capacity(max_k + 1);
    mu.push(BigRational::from_integer(1.into()));
    if max_k >= 1 {
        mu.push(aj.clone());
    }
    for k in 2..=max_k {
        let next = &aj * &mu[k - 1] + &inv_n * BigRational::from_integer((k - 1).into()) * &mu[k - 2];
        mu.push(next);
    }
    mu
}

/// Raw moment `m_k^{(j)} = int s^k exp(-n(s^2/2 - a_j s)) ds`, `j` in `1..=3`.
pub fn moments(fp: &FiniteSizeParams, j: usize, k: usize) -> Result<Moment> {
    if !(1..=3).contains(&j) {
        return Err(Error::InvalidParameter(format!("weight index {j} outside 1..=3")));
    }
    let max_k = 4 * fp.n.max(1);
    if k > max_k {
        return Err(Error::InvalidParameter(format!("moment order {k} above the limit {max_k}")));
    }
    let mu = gaussian_moments(fp, j - 1, k)[k];
    if mu.is_finite() {
        let sign = if mu == 0.0 { 0.0 } else { mu.signum() };
        return Ok(Moment { log_abs: mu.abs().ln() + moment_scale_ln(fp, j - 1), sign });
    }
    let exact = gaussian_moments_exact(fp, j - 1, k).pop().expect("k + 1 entries");
    Ok(Moment { log_abs: ln_abs_rational(&exact) + moment_scale_ln(fp, j - 1), sign: sign_of(&exact) })
}

fn sign_of(r: &BigRational) -> f64 {
    use num_traits::Signed;
    if r.is_positive() {
        1.0
    } else if r.is_negative() {
        -1.0
    } else {
        0.0
    }
}

/// `ln |r|` for rationals whose magnitude may exceed the float range.
pub(crate) fn ln_abs_rational(r: &BigRational) -> f64 {
    fn ln_big(b: &BigInt) -> f64 {
        let bits = b.bits();
        if bits < 1000 {
            num_traits::ToPrimitive::to_f64(b).expect("finite").abs().ln()
        } else {
            let shift = bits - 900;
            let top: BigInt = b >> shift;
            num_traits::ToPrimitive::to_f64(&top).expect("finite").abs().ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
    ln_big(r.numer()) - ln_big(r.denom())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOptions};

    fn fp(n: usize) -> FiniteSizeParams {
        FiniteSizeParams::from_t(2.0, 0.5, n).unwrap()
    }

    #[test]
    fn centered_weight() {
        let f = fp(6);
        let m0 = moments(&f, 2, 0).unwrap().value();
        assert!((m0 - (2.0 * std::f64::consts::PI / 6.0).sqrt()).abs() < 1e-14);
        assert_eq!(moments(&f, 2, 1).unwrap().value(), 0.0);
    }

    #[test]
    fn shifted_mean_and_quadrature() {
        let f = fp(6);
        let m0 = moments(&f, 1, 0).unwrap().value();
        let m1 = moments(&f, 1, 1).unwrap().value();
        assert!((m1 / m0 - 2.0).abs() < 1e-13);
        for k in [0usize, 3, 7] {
            let q = integrate(
                |s: f64| s.powi(k as i32) * (-6.0 * (0.5 * s * s - 2.0 * s)).exp(),
                -10.0,
                14.0,
                QuadOptions::with_tol(1e-13, 0.0),
            )
            .unwrap()
            .value;
            let m = moments(&f, 1, k).unwrap().value();
            assert!((q - m).abs() <= 1e-11 * m.abs(), "k={k}: {q} vs {m}");
        }
    }

    #[test]
    fn exact_and_float_agree() {
        let f = fp(12);
        let float = gaussian_moments(&f, 0, 30);
        let exact = gaussian_moments_exact(&f, 0, 30);
        for (x, e) in float.iter().zip(&exact) {
            let v = num_traits::ToPrimitive::to_f64(e).unwrap();
            assert!((x - v).abs() <= 1e-14 * v.abs());
        }
    }

    #[test]
    fn log_scale_beyond_float_range() {
        let f = FiniteSizeParams::new(40.0, 1, 1, 1).unwrap();
        let m = moments(&f, 1, 12).unwrap();
        assert!(m.log_abs > 709.0 && m.sign == 1.0);
        assert!(m.value().is_infinite());
        assert!((m.log_abs - (0.5 * 3.0 * 1600.0 + 12.0 * 40f64.ln() + 0.5 * (2.0 * std::f64::consts::PI / 3.0).ln())).abs() < 0.05);
    }
}
