//! Correlation kernel
//! `K_n(x, y) = exp(-n(x^2 + y^2)/4) / (2 pi i (x - y))
//!   * (0, e^{n a1 y}, e^{n a2 y}, e^{n a3 y}) Y+(y)^{-1} Y+(x) (1, 0, 0, 0)^T`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::family::mop_build;
use super::ymatrix::{column_scales, ode_matrix, reduced_psi, row_constants, CMatrix4, PsiRoute};
use super::FiniteSizeParams;
use crate::error::{Error, Result};
use crate::lambda_functions::LambdaFunctions;
use crate::quadrature::{integrate, QuadOptions};
use crate::spectral_curve::Side;

const DIAGONAL_GAP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub x: f64,
    pub y: f64,
    pub n: usize,
    pub kn: f64,
    /// `exp(n(h(x) - h(y))) K_n(x, y)`; absent without a limiting curve.
    pub hat_kn: Option<f64>,
    /// Imaginary part left over from complex arithmetic.
    pub imaginary_part: f64,
}

/// Reduced `Psi+` at a real point, its inverse and the `x`-derivative of its
/// first column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiData {
    pub x: f64,
    pub psi: CMatrix4,
    pub inverse: CMatrix4,
    pub first_column_derivative: Vector4<Complex64>,
}

/// Kernel evaluator for one finite size.
#[derive(Debug, Clone)]
pub struct FiniteKernel {
    pub fp: FiniteSizeParams,
    lambda: Option<LambdaFunctions>,
}

impl FiniteKernel {
    pub fn new(fp: FiniteSizeParams) -> Self {
        FiniteKernel { fp, lambda: None }
    }

    /// Attach the limiting `h` used by the conjugated kernel.
    pub fn with_lambda(fp: FiniteSizeParams, lambda: LambdaFunctions) -> Self {
        FiniteKernel { fp, lambda: Some(lambda) }
    }

    pub fn psi(&self, x: f64) -> Result<PsiData> {
        let r = reduced_psi(&self.fp, self.fp.index(), Complex64::from(x), Side::Above, PsiRoute::Lattice, false)?;
        let inverse = r.psi.try_inverse().ok_or_else(|| Error::Domain(format!("Psi is singular at x = {x}")))?;
        let n = Complex64::from(self.fp.scaling());
        let shifted = ode_matrix(&self.fp, Complex64::from(x)) + CMatrix4::identity() * Complex64::from(x);
        let first_column_derivative = shifted * r.psi.column(0) * n;
        Ok(PsiData { x, psi: r.psi, inverse, first_column_derivative })
    }

    /// `exp(-n (y - a_j)^2 / 2)` for the three transform rows.
    fn weights(&self, y: f64) -> [f64; 3] {
        let n = self.fp.scaling();
        self.fp.sources().map(|a| (-0.5 * n * (y - a) * (y - a)).exp())
    }

    /// Complex kernel value from precomputed `Psi` data.
    pub fn kernel_complex(&self, px: &PsiData, py: &PsiData) -> Complex64 {
        let (x, y) = (px.x, py.x);
        let w = self.weights(y);
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        if (x - y).abs() < DIAGONAL_GAP {
            let v = py.inverse * py.first_column_derivative;
            return (0..3).map(|j| v[j + 1] * w[j]).sum::<Complex64>() / two_pi_i;
        }
        let v = py.inverse * px.psi.column(0);
        let n = self.fp.scaling();
        let prefactor = (0.25 * n * (y * y - x * x)).exp() / (x - y);
        (0..3).map(|j| v[j + 1] * w[j]).sum::<Complex64>() * prefactor / two_pi_i
    }

    pub fn kernel(&self, px: &PsiData, py: &PsiData) -> f64 {
        self.kernel_complex(px, py).re
    }

    /// Kernel evaluation with the conjugated value when a curve is attached.
    pub fn eval(&self, x: f64, y: f64) -> Result<KernelEval> {
        let px = self.psi(x)?;
        let py = if x == y { px } else { self.psi(y)? };
        let k = self.kernel_complex(&px, &py);
        let hat_kn = match &self.lambda {
            Some(l) => Some(k.re * self.conjugation(l, x, y)?),
            None => None,
        };
        Ok(KernelEval { x, y, n: self.fp.n, kn: k.re, hat_kn, imaginary_part: k.im })
    }

    /// `exp(n(h(x) - h(y)))` with `h` continued past the support edges.
    pub fn conjugation(&self, lambda: &LambdaFunctions, x: f64, y: f64) -> Result<f64> {
        if x == y {
            return Ok(1.0);
        }
        let n = self.fp.scaling();
        Ok((n * (lambda.h_extended(x)? - lambda.h_extended(y)?)).exp())
    }

    pub fn diagonal(&self, x: f64) -> Result<f64> {
        let p = self.psi(x)?;
        Ok(self.kernel(&p, &p))
    }

    /// The same kernel through `Y^{-1} = adj(Y)`, with the true row
    /// constants and column scales instead of an inversion.
    pub fn adjugate_kernel(&self, x: f64, y: f64) -> Result<f64> {
        let fp = &self.fp;
        let fam = mop_build(fp, fp.index())?;
        let consts = row_constants(&fam)?;
        let scales = column_scales(fp);
        let full = |m: &CMatrix4| CMatrix4::from_fn(|r, c| consts[r] * m[(r, c)] * scales[c]);
        let px = self.psi(x)?;
        let py = if x == y { px } else { self.psi(y)? };
        let adj = adjugate(&full(&py.psi));
        let n = fp.scaling();
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        let row_weights = fp.sources().map(|a| (n * a * y).exp());
        let column = if (x - y).abs() < DIAGONAL_GAP {
            Vector4::from_fn(|r, _| consts[r] * px.first_column_derivative[r])
        } else {
            Vector4::from_fn(|r, _| consts[r] * px.psi[(r, 0)])
        };
        let v = adj * column;
        let sum: Complex64 = (0..3).map(|j| v[j + 1] * row_weights[j]).sum();
        let value = if (x - y).abs() < DIAGONAL_GAP {
            sum * (-0.5 * n * x * x).exp() / two_pi_i
        } else {
            sum * (-0.25 * n * (x * x + y * y)).exp() / (two_pi_i * (x - y))
        };
        Ok(value.re)
    }
}

/// Adjugate by cofactors.
pub(crate) fn adjugate(m: &CMatrix4) -> CMatrix4 {
    CMatrix4::from_fn(|r, c| {
        let minor = Matrix3::from_fn(|i, j| {
            let ii = if i < c { i } else { i + 1 };
            let jj = if j < r { j } else { j + 1 };
            m[(ii, jj)]
        });
        let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
        minor.determinant() * sign
    })
}

/// `K_n(x, y)` without conjugation.
pub fn kernel_kn(fp: &FiniteSizeParams, x: f64, y: f64) -> Result<KernelEval> {
    FiniteKernel::new(*fp).eval(x, y)
}

/// `exp(n(h(x) - h(y))) K_n(x, y)` for `x, y` in the open support.
pub fn hat_kernel(fp: &FiniteSizeParams, lambda: &LambdaFunctions, x: f64, y: f64) -> Result<f64> {
    let hx = lambda.h_function(x)?.h;
    let hy = lambda.h_function(y)?.h;
    let k = kernel_kn(fp, x, y)?.kn;
    Ok((fp.scaling() * (hx - hy)).exp() * k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub n: usize,
    pub integral: f64,
    pub relative_error: f64,
    pub window: (f64, f64),
}

/// `int K_n(x, x) dx` over a window wide enough for the Gaussian tails.
pub fn trace_identity(fp: &FiniteSizeParams) -> Result<TraceReport> {
    let kernel = FiniteKernel::new(*fp);
    let half = fp.a + 8.0;
    let panels = 16;
    let mut total = 0.0;
    let mut failure = None;
    for p in 0..panels {
        let lo = -half + 2.0 * half * p as f64 / panels as f64;
        let hi = lo + 2.0 * half / panels as f64;
        total += integrate(
            |x: f64| match kernel.diagonal(x) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            lo,
            hi,
            QuadOptions::with_tol(1e-10, 1e-12),
        )?
        .value;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let n = fp.n as f64;
    Ok(TraceReport { n: fp.n, integral: total, relative_error: (total - n).abs() / n, window: (-half, half) })
}
