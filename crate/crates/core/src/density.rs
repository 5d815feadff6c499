//! Limiting eigenvalue density on the three-interval support.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::quadrature::{integrate_sqrt_ends, QuadOptions};
use crate::spectral_curve::{Edge, Side, SpectralCurve, SupportData};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub x: f64,
    pub rho: f64,
    pub in_support: bool,
}

/// `rho(x) = Im xi_1+(x) / pi`, zero off the support.
pub fn rho(curve: &SpectralCurve, x: f64) -> Result<DensityValue> {
    if curve.support.open_interval(x).is_none() {
        return Ok(DensityValue { x, rho: 0.0, in_support: curve.support.in_closed_support(x) });
    }
    let xi = curve.sheets_at_real(x, Side::Above)?.sheet(1);
    Ok(DensityValue { x, rho: xi.im.max(0.0) / std::f64::consts::PI, in_support: true })
}

/// Masses of the left, center and right intervals.
pub fn masses(curve: &SpectralCurve) -> Result<[f64; 3]> {
    let opts = QuadOptions::with_tol(1e-12, 1e-13);
    let mut out = [0.0; 3];
    for (k, (lo, hi)) in curve.support.intervals().into_iter().enumerate() {
        out[k] = integrate_sqrt_ends(|x| rho(curve, x).map(|v| v.rho).unwrap_or(f64::NAN), lo, hi, opts)?.value;
    }
    Ok(out)
}

/// Mass of `[lo, hi]` intersected with the support.
pub fn mass_between(curve: &SpectralCurve, lo: f64, hi: f64) -> Result<f64> {
    let opts = QuadOptions::with_tol(1e-10, 1e-13);
    let mut total = 0.0;
    for (a, b) in curve.support.intervals() {
        let (l, h) = (lo.max(a), hi.min(b));
        if l >= h {
            continue;
        }
        total += cumulative(curve, a, b, h, opts)? - cumulative(curve, a, b, l, opts)?;
    }
    Ok(total)
}

/// `int_a^x rho` for `x` in `[a, b]`, through the `sin^2` map of `[a, b]`.
fn cumulative(curve: &SpectralCurve, a: f64, b: f64, x: f64, opts: QuadOptions) -> Result<f64> {
    if x <= a {
        return Ok(0.0);
    }
    let w = b - a;
    let theta_end = ((x - a) / w).clamp(0.0, 1.0).sqrt().asin();
    let r = crate::quadrature::integrate(
        |theta: f64| {
            let s = theta.sin();
            let xv = a + w * s * s;
            rho(curve, xv).map(|v| v.rho).unwrap_or(f64::NAN) * w * (2.0 * theta).sin()
        },
        0.0,
        theta_end,
        opts,
    )?;
    Ok(r.value)
}

/// Edge constants `sqrt(2 / |z''(xi_c)|)` for the six edges.
pub fn edge_constants(support: &SupportData) -> Vec<(Edge, f64)> {
    Edge::ALL.iter().map(|&e| (e, support.rho_edge(e))).collect()
}

/// Sampled density with its masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub support: SupportData,
    pub samples: Vec<(f64, f64)>,
    pub masses: [f64; 3],
}

impl DensityCurve {
    /// Sample `rho` on `points` equally spaced points of each interval, plus
    /// the masses.
    pub fn sample(curve: &SpectralCurve, points: usize) -> Result<Self> {
        use rayon::prelude::*;
        let xs: Vec<f64> = curve
            .support
            .intervals()
            .iter()
            .flat_map(|&(lo, hi)| {
                (0..points).map(move |k| lo + (hi - lo) * k as f64 / (points.max(2) - 1) as f64)
            })
            .collect();
        let samples = xs
            .par_iter()
            .map(|&x| rho(curve, x).map(|v| (x, v.rho)))
            .collect::<Result<Vec<_>>>()?;
        Ok(DensityCurve { support: curve.support, samples, masses: masses(curve)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masses_at_reference_point() {
        let c = SpectralCurve::from_a_t(2.0, 0.4).unwrap();
        let m = masses(&c).unwrap();
        assert!((m[0] - 0.3).abs() < 1e-8);
        assert!((m[1] - 0.4).abs() < 1e-8);
        assert!((m[2] - 0.3).abs() < 1e-8);
        assert!((m[0] - m[2]).abs() < 1e-10);
    }

    #[test]
    fn positive_inside_zero_outside() {
        let c = SpectralCurve::from_a_t(2.0, 0.5).unwrap();
        let s = c.support;
        assert!(rho(&c, 0.5 * (s.z2 + s.z3)).unwrap().rho > 0.0);
        let out = rho(&c, s.z3 + 0.1).unwrap();
        assert_eq!(out.rho, 0.0);
        assert!(!out.in_support);
        assert!(rho(&c, s.z3).unwrap().rho < 1e-5);
        let x0 = 0.37;
        assert!((rho(&c, x0).unwrap().rho - rho(&c, -x0).unwrap().rho).abs() < 1e-10);
    }

    #[test]
    fn reference_values() {
        let c = SpectralCurve::from_a_t(2.0, 0.5).unwrap();
        assert!((rho(&c, 0.0).unwrap().rho - 0.238531).abs() < 1e-6);
    }

    #[test]
    fn density_rises_left_of_z1() {
        let c = SpectralCurve::from_a_t(2.0, 0.5).unwrap();
        let z1 = c.support.z1;
        assert!(rho(&c, z1 - 1e-3).unwrap().rho < rho(&c, z1 - 1e-2).unwrap().rho);
    }

    #[test]
    fn partial_masses_add_up() {
        let c = SpectralCurve::from_a_t(2.0, 0.5).unwrap();
        let s = c.support;
        let mid = 0.5 * (s.z2 + s.z3);
        let left = mass_between(&c, 0.5 * (s.z1 + s.z2), mid).unwrap();
        let right = mass_between(&c, mid, s.z3 + 1.0).unwrap();
        assert!((left + right - 0.25).abs() < 1e-9);
    }
}
