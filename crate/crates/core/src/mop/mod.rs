//! Finite-n objects: multiple Hermite polynomials for the three shifted
//! Gaussian weights `exp(-n(x^2/2 - a_j x))`, their Cauchy transforms, the
//! 4x4 matrix `Y` and the correlation kernel `K_n`.

mod cauchy;
mod faddeeva;
mod family;
mod kernel;
mod moments;
mod ymatrix;

pub use cauchy::{cauchy_transform, reduced_cauchy_fourier, reduced_cauchy_recursion, CauchyMethod, CauchyValue};
pub use faddeeva::{faddeeva, faddeeva_derivative};
pub use family::{lattice_polynomials, mop_build, mop_build_with, LatticeValues, MopCache, MopFamily};
pub use kernel::{hat_kernel, kernel_kn, trace_identity, FiniteKernel, KernelEval, PsiData, TraceReport};
pub use moments::{gaussian_moments, moment_scale_ln, moments, Moment};
pub use ymatrix::{
    assemble_y, jump_matrix, ode_matrix, psi_family_route, recurrence_matrix, verify_ode, verify_recurrence, verify_y_jump,
    PsiRoute, YMatrix,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multi-index `(n1, n2, n3)`.
pub type Index = [usize; 3];

/// Matrix size, its split over the three source eigenvalues and the source
/// spacing `a`. The scaling `N` equals `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteSizeParams {
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub a: f64,
}

impl FiniteSizeParams {
    pub fn new(a: f64, n1: usize, n2: usize, n3: usize) -> Result<Self> {
        if n1 != n3 {
            return Err(Error::InvalidParameter(format!("n1 = {n1} and n3 = {n3} must agree")));
        }
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter(format!("every block needs at least one eigenvalue: ({n1}, {n2}, {n3})")));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!("a = {a} must be positive and finite")));
        }
        Ok(FiniteSizeParams { n: n1 + n2 + n3, n1, n2, n3, a })
    }

    /// Split `n` with `n2 = round(t n)`, moved by one toward `t n` when
    /// needed so that `n - n2` is even.
    pub fn from_t(a: f64, t: f64, n: usize) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidParameter(format!("t = {t} must lie in (0, 1)")));
        }
        let target = t * n as f64;
        let mut n2 = target.round() as usize;
        if (n - n2.min(n)) % 2 == 1 {
            let down = n2.saturating_sub(1);
            let up = n2 + 1;
            n2 = if (up as f64 - target).abs() < (target - down as f64).abs() && up < n { up } else { down };
        }
        let n1 = (n - n2.min(n)) / 2;
        Self::new(a, n1, n2, n1)
    }

    pub fn index(&self) -> Index {
        [self.n1, self.n2, self.n3]
    }

    /// `N`.
    pub fn scaling(&self) -> f64 {
        self.n as f64
    }

    /// `(a1, a2, a3) = (a, 0, -a)`.
    pub fn sources(&self) -> [f64; 3] {
        [self.a, 0.0, -self.a]
    }

    /// `n_j / N`.
    pub fn fractions(&self) -> [f64; 3] {
        let n = self.scaling();
        [self.n1 as f64 / n, self.n2 as f64 / n, self.n3 as f64 / n]
    }

    /// `[m, m - e1, m - e2, m - e3]` for the fp's own index.
    pub fn row_indices(&self) -> [Index; 4] {
        row_indices(self.index())
    }
}

pub(crate) fn row_indices(m: Index) -> [Index; 4] {
    let lower = |j: usize| {
        let mut k = m;
        k[j] -= 1;
        k
    };
    [m, lower(0), lower(1), lower(2)]
}
