//! The matrices `Y` and `Psi`, the differential equation in `z` and the
//! raising recurrence in `n1`.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cauchy::{cauchy_transform, reduced_cauchy_fourier, CauchyMethod};
use super::family::{lattice_polynomials, mop_build, MopFamily};
use super::{row_indices, FiniteSizeParams, Index};
use crate::error::{Error, Result};
use crate::spectral_curve::Side;

pub(crate) type CMatrix4 = Matrix4<Complex64>;

/// How the entries of `Psi` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiRoute {
    /// Polynomials from the nearest-neighbour recurrence, transforms from the
    /// Fourier ray.
    Lattice,
    /// Polynomials from the moment-solve coefficients, transforms from the
    /// moment recursion (ray integral as fallback).
    Family,
}

/// Rows `[m, m - e1, m - e2, m - e3]`, columns `[P, C_1, C_2, C_3]`, each
/// transform column carrying the factor `exp(-n a_j^2 / 2)`; no row
/// constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ReducedPsi {
    pub psi: CMatrix4,
    pub dpsi: Option<CMatrix4>,
}

pub(crate) fn reduced_psi(
    fp: &FiniteSizeParams,
    index: Index,
    z: Complex64,
    side: Side,
    route: PsiRoute,
    with_derivative: bool,
) -> Result<ReducedPsi> {
    let rows = row_indices(index);
    let mut psi = CMatrix4::zeros();
    let mut dpsi = CMatrix4::zeros();
    match route {
        PsiRoute::Lattice => {
            let lat = lattice_polynomials(fp, index, z)?;
            for r in 0..4 {
                psi[(r, 0)] = lat.values[r];
                dpsi[(r, 0)] = lat.derivatives[r];
                for j in 0..3 {
                    let c = reduced_cauchy_fourier(fp, rows[r], j, z, side, with_derivative)?;
                    psi[(r, j + 1)] = c.value;
                    dpsi[(r, j + 1)] = c.derivative.unwrap_or_default();
                }
            }
        }
        PsiRoute::Family => {
            for r in 0..4 {
                let fam = mop_build(fp, rows[r])?;
                psi[(r, 0)] = fam.eval(z);
                dpsi[(r, 0)] = fam.eval_derivative(z);
                for j in 0..3 {
                    let c = cauchy_transform(fp, &fam, j + 1, z, side, CauchyMethod::Auto)?;
                    let back = (-0.5 * fp.scaling() * fp.sources()[j].powi(2)).exp();
                    psi[(r, j + 1)] = c.value * back;
                    dpsi[(r, j + 1)] = c.derivative.unwrap_or_default() * back;
                }
            }
        }
    }
    Ok(ReducedPsi { psi, dpsi: with_derivative.then_some(dpsi) })
}

/// `Psi` of the family route with its derivative, for external checks.
pub fn psi_family_route(fp: &FiniteSizeParams, index: Index, z: Complex64, side: Side) -> Result<(CMatrix4, CMatrix4)> {
    let r = reduced_psi(fp, index, z, side, PsiRoute::Family, true)?;
    Ok((r.psi, r.dpsi.expect("requested")))
}

/// `exp(n a_j^2 / 2)` for the transform columns, 1 for the polynomial column.
pub(crate) fn column_scales(fp: &FiniteSizeParams) -> [f64; 4] {
    let n = fp.scaling();
    let s = fp.sources();
    [1.0, (0.5 * n * s[0] * s[0]).exp(), (0.5 * n * s[1] * s[1]).exp(), (0.5 * n * s[2] * s[2]).exp()]
}

/// `diag(1, c1, c2, c3)` of `fam`.
pub(crate) fn row_constants(fam: &MopFamily) -> Result<[Complex64; 4]> {
    let mut out = [Complex64::new(1.0, 0.0); 4];
    for j in 0..3 {
        out[j + 1] = fam.c_consts[j]
            .ok_or_else(|| Error::InvalidParameter(format!("index {:?} has no row constant {}", fam.index, j + 1)))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YMatrix {
    pub x: Complex64,
    pub side: Side,
    pub y: CMatrix4,
    pub det_residual: f64,
}

/// `Y(z)` for the fp's own index.
pub fn assemble_y(fp: &FiniteSizeParams, z: Complex64, side: Side) -> Result<YMatrix> {
    let fam = mop_build(fp, fp.index())?;
    let consts = row_constants(&fam)?;
    let reduced = reduced_psi(fp, fp.index(), z, side, PsiRoute::Lattice, false)?;
    let scales = column_scales(fp);
    let y = CMatrix4::from_fn(|r, c| consts[r] * reduced.psi[(r, c)] * scales[c]);
    Ok(YMatrix { x: z, side, y, det_residual: (y.determinant() - 1.0).norm() })
}

/// The constant-in-`x` jump `[[1, w1, w2, w3], e2, e3, e4]` at real `x`.
pub fn jump_matrix(fp: &FiniteSizeParams, x: f64) -> CMatrix4 {
    let n = fp.scaling();
    let mut j = CMatrix4::identity();
    for (k, a) in fp.sources().iter().enumerate() {
        j[(0, k + 1)] = Complex64::from((-n * (0.5 * x * x - a * x)).exp());
    }
    j
}

/// Largest `|Y+ - Y- J| / |Y- J|` (max-entry norms) over `points`.
pub fn verify_y_jump(fp: &FiniteSizeParams, points: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &x in points {
        let z = Complex64::from(x);
        let plus = assemble_y(fp, z, Side::Above)?.y;
        let rhs = assemble_y(fp, z, Side::Below)?.y * jump_matrix(fp, x);
        worst = worst.max(max_entry(&(plus - rhs)) / max_entry(&rhs));
    }
    Ok(worst)
}

pub(crate) fn max_entry(m: &CMatrix4) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Coefficient matrix of `Psi' = N A Psi`.
pub fn ode_matrix(fp: &FiniteSizeParams, z: Complex64) -> CMatrix4 {
    let [t1, t2, t3] = fp.fractions();
    let s = fp.sources();
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let c = Complex64::from;
    CMatrix4::new(
        -z,
        c(t1),
        c(t2),
        c(t3),
        -one,
        c(-s[0]),
        zero,
        zero,
        -one,
        zero,
        c(-s[1]),
        zero,
        -one,
        zero,
        zero,
        c(-s[2]),
    )
}

/// `U` with `Psi_{m + e1} = U Psi_m`.
pub fn recurrence_matrix(fp: &FiniteSizeParams, index: Index, z: Complex64) -> CMatrix4 {
    let n = fp.scaling();
    let s = fp.sources();
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let c = Complex64::from;
    CMatrix4::new(
        z - s[0],
        c(-(index[0] as f64) / n),
        c(-(index[1] as f64) / n),
        c(-(index[2] as f64) / n),
        one,
        zero,
        zero,
        zero,
        one,
        zero,
        c(s[1] - s[0]),
        zero,
        one,
        zero,
        zero,
        c(s[2] - s[0]),
    )
}

/// `Psi = diag(1, 1/c) Y diag(exp(-n z^2/2), exp(-n a_j z))` and its
/// derivative, from the family route.
fn psi_with_exponentials(fp: &FiniteSizeParams, index: Index, z: Complex64) -> Result<(CMatrix4, CMatrix4)> {
    let side = if z.im >= 0.0 { Side::Above } else { Side::Below };
    let (p, dp) = psi_family_route(fp, index, z, side)?;
    let n = fp.scaling();
    let scales = column_scales(fp);
    let s = fp.sources();
    let exps = Vector4::new((-0.5 * n * z * z).exp(), (-n * s[0] * z).exp(), (-n * s[1] * z).exp(), (-n * s[2] * z).exp());
    let rates = Vector4::new(-n * z, Complex64::from(-n * s[0]), Complex64::from(-n * s[1]), Complex64::from(-n * s[2]));
    let psi = CMatrix4::from_fn(|r, c| p[(r, c)] * scales[c] * exps[c]);
    let dpsi = CMatrix4::from_fn(|r, c| (dp[(r, c)] + p[(r, c)] * rates[c]) * scales[c] * exps[c]);
    Ok((psi, dpsi))
}

/// `|Psi' - N A Psi| / |N A Psi|` (Frobenius) at the fp's own index.
pub fn verify_ode(fp: &FiniteSizeParams, z: Complex64) -> Result<f64> {
    if z.im == 0.0 {
        return Err(Error::Domain("the differential equation is checked off the real axis".into()));
    }
    let (psi, dpsi) = psi_with_exponentials(fp, fp.index(), z)?;
    let rhs = ode_matrix(fp, z) * psi * Complex64::from(fp.scaling());
    Ok((dpsi - rhs).norm() / rhs.norm())
}

/// `|Psi_{m + e1} - U_m Psi_m| / |Psi_{m + e1}|` (Frobenius).
pub fn verify_recurrence(fp: &FiniteSizeParams, index: Index, z: Complex64) -> Result<f64> {
    if index.iter().any(|&k| k == 0) {
        return Err(Error::InvalidParameter(format!("recurrence needs a positive index, got {index:?}")));
    }
    let raised = [index[0] + 1, index[1], index[2]];
    let (lhs, _) = psi_with_exponentials(fp, raised, z)?;
    let (psi, _) = psi_with_exponentials(fp, index, z)?;
    let rhs = recurrence_matrix(fp, index, z) * psi;
    Ok((lhs - rhs).norm() / lhs.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(n: usize) -> FiniteSizeParams {
        FiniteSizeParams::from_t(2.0, 0.5, n).unwrap()
    }

    #[test]
    fn unit_determinant() {
        for n in [3, 6, 12] {
            let f = fp(n);
            let z1 = 1.305_900_964_111_843_8;
            for z in [Complex64::from(0.7 * z1), Complex64::new(1.5, 0.8), Complex64::new(-3.0, -0.2)] {
                let side = if z.im >= 0.0 { Side::Above } else { Side::Below };
                let y = assemble_y(&f, z, side).unwrap();
                assert!(y.det_residual <= 1e-9, "n={n} z={z}: {}", y.det_residual);
            }
        }
    }

    #[test]
    fn jump_on_real_axis() {
        let f = fp(6);
        let points: Vec<f64> = (0..10).map(|k| -3.5 + 0.75 * k as f64).collect();
        let r = verify_y_jump(&f, &points).unwrap();
        assert!(r <= 1e-8, "{r}");
    }

    #[test]
    fn normalized_at_infinity() {
        let f = fp(3);
        let deviation = |r: f64| {
            let z = Complex64::new(0.0, r);
            let y = assemble_y(&f, z, Side::OffAxis).unwrap().y;
            let n = f.n as i32;
            let d = [z.powi(-n), z.powi(f.n1 as i32), z.powi(f.n2 as i32), z.powi(f.n3 as i32)];
            max_entry(&(CMatrix4::from_fn(|r, c| y[(r, c)] * d[c]) - CMatrix4::identity()))
        };
        let (d3, d4, d5) = (deviation(1e3), deviation(1e4), deviation(1e5));
        assert!((d3 / d4 - 10.0).abs() < 0.1 && (d4 / d5 - 10.0).abs() < 0.1, "{d3} {d4} {d5}");
        // leading 1/z coefficient: the largest of |h^(j)| / 2 pi (first row)
        // and |c_j| (first column)
        let fam = mop_build(&f, f.index()).unwrap();
        let predicted = (0..3)
            .map(|j| (fam.norms[j].abs() / (2.0 * std::f64::consts::PI)).max(fam.c_consts[j].unwrap().norm()))
            .fold(0.0, f64::max);
        assert!((d4 * 1e4 / predicted - 1.0).abs() < 1e-2, "{} vs {predicted}", d4 * 1e4);
    }

    #[test]
    fn ode_residuals() {
        let z = Complex64::new(1.0, 1.0);
        let r3 = verify_ode(&fp(3), z).unwrap();
        assert!(r3 <= 1e-8, "{r3}");
        let r6 = verify_ode(&fp(6), z).unwrap();
        assert!(r6 <= 1e-7, "{r6}");
        let mirrored = verify_ode(&fp(3), -z.conj()).unwrap();
        assert!((mirrored - r3).abs() <= 1e-8);
    }

    #[test]
    fn recurrence_residual_and_coefficients() {
        let f = fp(3);
        let z = Complex64::new(2.0, 1.0);
        let r = verify_recurrence(&f, [1, 1, 1], z).unwrap();
        assert!(r <= 1e-8, "{r}");
        let u = recurrence_matrix(&f, [1, 1, 1], z);
        assert_eq!(u[(0, 1)], Complex64::from(-1.0 / 3.0));
        assert_eq!(u[(2, 2)], Complex64::from(-2.0));
    }
}
