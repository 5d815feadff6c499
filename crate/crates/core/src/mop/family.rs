//! Multiple Hermite polynomials from the moment conditions, with a cache of
//! built families and a lattice-recurrence evaluator.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::moments::{gaussian_moments, gaussian_moments_exact, moment_scale_ln};
use super::{row_indices, FiniteSizeParams, Index};
use crate::error::{Error, Result};
use crate::profile::{Precision, Tolerances};

/// `P_index` with its norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MopFamily {
    pub index: Index,
    /// `N`.
    pub scaling: usize,
    pub a: f64,
    /// Ascending powers; the last entry is 1.
    pub coeffs: Vec<f64>,
    /// `h^(j) = int P x^{m_j} w_j`.
    pub norms: [f64; 3],
    /// `q^(k) = int P x^{m_k + 1} w_k`.
    pub q_norms: [f64; 3],
    /// Norms divided by `exp(n a_j^2 / 2) sqrt(2 pi / n)`.
    pub reduced_norms: [f64; 3],
    pub reduced_q_norms: [f64; 3],
    /// `c_j = -2 pi i / h^(j)` of the index lowered in direction `j`;
    /// absent when `m_j = 0`.
    pub c_consts: [Option<Complex64>; 3],
    /// Coefficient of `x^{n-1}`.
    pub sub_leading: f64,
    pub precision: Precision,
    pub condition: f64,
    /// Largest scaled orthogonality residual.
    pub orthogonality_residual: f64,
}

impl MopFamily {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_derivative(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (k, &c)| acc * z + c * k as f64)
    }

    /// Scaled residuals of `int P x^m w_j = 0`, `m < m_j`: each divided by
    /// the sum of the absolute values of its terms.
    pub fn orthogonality_residuals(&self) -> Vec<f64> {
        let fp = self.params();
        let mut out = Vec::new();
        for j in 0..3 {
            let mu = gaussian_moments(&fp, j, self.degree() + self.index[j]);
            for r in 0..self.index[j] {
                let (sum, scale) = self
                    .coeffs
                    .iter()
                    .enumerate()
                    .fold((0.0, 0.0), |(s, a), (i, &c)| (s + c * mu[i + r], a + (c * mu[i + r]).abs()));
                out.push(sum.abs() / scale.max(f64::MIN_POSITIVE));
            }
        }
        out
    }

    fn params(&self) -> FiniteSizeParams {
        FiniteSizeParams { n: self.scaling, n1: self.index[0], n2: self.index[1], n3: self.index[2], a: self.a }
    }
}

#[derive(Debug, Clone)]
struct CoreSolution {
    coeffs: Vec<f64>,
    reduced_norms: [f64; 3],
    reduced_q_norms: [f64; 3],
    precision: Precision,
    condition: f64,
}

type Key = (u64, usize, Index, Precision);

/// Concurrent cache of built families; reads share a lock, insertion takes
/// it exclusively.
#[derive(Debug, Default)]
pub struct MopCache {
    cores: RwLock<HashMap<Key, Arc<CoreSolution>>>,
    families: RwLock<HashMap<Key, Arc<MopFamily>>>,
}

impl MopCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn global() -> &'static MopCache {
        static CACHE: OnceLock<MopCache> = OnceLock::new();
        CACHE.get_or_init(MopCache::new)
    }

    pub fn len(&self) -> usize {
        self.families.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_build(
        &self,
        fp: &FiniteSizeParams,
        index: Index,
        precision: Precision,
        tol: &Tolerances,
    ) -> Result<Arc<MopFamily>> {
        let key = (fp.a.to_bits(), fp.n, index, precision);
        if let Some(f) = self.families.read().expect("cache lock").get(&key) {
            return Ok(f.clone());
        }
        let core = self.core(fp, index, precision, tol)?;
        let mut c_consts = [None; 3];
        for j in 0..3 {
            if index[j] > 0 {
                let mut lower = index;
                lower[j] -= 1;
                let low = self.core(fp, lower, precision, tol)?;
                let inv = (-moment_scale_ln(fp, j)).exp() / low.reduced_norms[j];
                c_consts[j] = Some(Complex64::new(0.0, -2.0 * std::f64::consts::PI * inv));
            }
        }
        let scales: [f64; 3] = std::array::from_fn(|j| moment_scale_ln(fp, j).exp());
        let degree = core.coeffs.len() - 1;
        let mut family = MopFamily {
            index,
            scaling: fp.n,
            a: fp.a,
            coeffs: core.coeffs.clone(),
            norms: std::array::from_fn(|j| core.reduced_norms[j] * scales[j]),
            q_norms: std::array::from_fn(|j| core.reduced_q_norms[j] * scales[j]),
            reduced_norms: core.reduced_norms,
            reduced_q_norms: core.reduced_q_norms,
            c_consts,
            sub_leading: if degree > 0 { core.coeffs[degree - 1] } else { 0.0 },
            precision: core.precision,
            condition: core.condition,
            orthogonality_residual: 0.0,
        };
        family.orthogonality_residual = family.orthogonality_residuals().into_iter().fold(0.0, f64::max);
        let family = Arc::new(family);
        self.families.write().expect("cache lock").entry(key).or_insert_with(|| family.clone());
        Ok(family)
    }

    fn core(&self, fp: &FiniteSizeParams, index: Index, precision: Precision, tol: &Tolerances) -> Result<Arc<CoreSolution>> {
        let key = (fp.a.to_bits(), fp.n, index, precision);
        if let Some(c) = self.cores.read().expect("cache lock").get(&key) {
            return Ok(c.clone());
        }
        let core = Arc::new(solve_core(fp, index, precision, tol)?);
        self.cores.write().expect("cache lock").entry(key).or_insert_with(|| core.clone());
        Ok(core)
    }
}

/// Build `P_index` for the weights of `fp` with the default profile.
pub fn mop_build(fp: &FiniteSizeParams, index: Index) -> Result<Arc<MopFamily>> {
    mop_build_with(fp, index, Precision::Auto, &Tolerances::default())
}

pub fn mop_build_with(
    fp: &FiniteSizeParams,
    index: Index,
    precision: Precision,
    tol: &Tolerances,
) -> Result<Arc<MopFamily>> {
    MopCache::global().get_or_build(fp, index, precision, tol)
}

fn solve_core(fp: &FiniteSizeParams, index: Index, precision: Precision, tol: &Tolerances) -> Result<CoreSolution> {
    let degree: usize = index.iter().sum();
    let max_k = degree + index.iter().max().copied().unwrap_or(0) + 1;
    match precision {
        Precision::Extended => solve_exact(fp, index, max_k),
        Precision::Double => solve_double(fp, index, max_k, tol.condition_limit),
        Precision::Auto => match solve_double(fp, index, max_k, tol.condition_limit) {
            Err(Error::IllConditioned { .. }) => solve_exact(fp, index, max_k),
            other => other,
        },
    }
}

fn solve_double(fp: &FiniteSizeParams, index: Index, max_k: usize, limit: f64) -> Result<CoreSolution> {
    let degree: usize = index.iter().sum();
    let mu: Vec<Vec<f64>> = (0..3).map(|j| gaussian_moments(fp, j, max_k)).collect();
    let mut coeffs = vec![0.0; degree + 1];
    coeffs[degree] = 1.0;
    let mut condition = 1.0;
    if degree > 0 {
        let mut m = DMatrix::<f64>::zeros(degree, degree);
        let mut rhs = DVector::<f64>::zeros(degree);
        let mut row = 0;
        for j in 0..3 {
            for r in 0..index[j] {
                let scale = (0..=degree).map(|i| mu[j][i + r].abs()).fold(0.0, f64::max);
                for i in 0..degree {
                    m[(row, i)] = mu[j][i + r] / scale;
                }
                rhs[row] = -mu[j][degree + r] / scale;
                row += 1;
            }
        }
        let col_scale: Vec<f64> =
            (0..degree).map(|i| m.column(i).iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE)).collect();
        for (i, s) in col_scale.iter().enumerate() {
            m.column_mut(i).scale_mut(1.0 / s);
        }
        let lu = m.clone().lu();
        let inverse = lu.try_inverse().ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
        condition = one_norm(&m) * one_norm(&inverse);
        if !condition.is_finite() || condition > limit {
            return Err(Error::IllConditioned { condition });
        }
        let y = lu.solve(&rhs).ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
        for i in 0..degree {
            coeffs[i] = y[i] / col_scale[i];
        }
    }
    let norm_at = |j: usize, power: usize| coeffs.iter().enumerate().map(|(i, c)| c * mu[j][i + power]).sum::<f64>();
    Ok(CoreSolution {
        reduced_norms: std::array::from_fn(|j| norm_at(j, index[j])),
        reduced_q_norms: std::array::from_fn(|j| norm_at(j, index[j] + 1)),
        coeffs,
        precision: Precision::Double,
        condition,
    })
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    a.lcm(b)
}

/// Exact solve over the rationals with fraction-free elimination.
fn solve_exact(fp: &FiniteSizeParams, index: Index, max_k: usize) -> Result<CoreSolution> {
    let degree: usize = index.iter().sum();
    let mu: Vec<Vec<BigRational>> = (0..3).map(|j| gaussian_moments_exact(fp, j, max_k)).collect();
    let mut coeffs_exact = vec![BigRational::zero(); degree + 1];
    coeffs_exact[degree] = BigRational::one();
    if degree > 0 {
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(degree);
        for j in 0..3 {
            for r in 0..index[j] {
                let entries: Vec<BigRational> =
                    (0..degree).map(|i| mu[j][i + r].clone()).chain([-mu[j][degree + r].clone()]).collect();
                let den = entries.iter().fold(BigInt::one(), |acc, e| lcm(&acc, e.denom()));
                rows.push(entries.iter().map(|e| e.numer() * (&den / e.denom())).collect());
            }
        }
        let solution = bareiss_solve(rows).ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
        coeffs_exact[..degree].clone_from_slice(&solution);
    }
    let norm_at = |j: usize, power: usize| {
        coeffs_exact.iter().enumerate().fold(BigRational::zero(), |acc, (i, c)| acc + c * &mu[j][i + power])
    };
    let to_f64 = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
    Ok(CoreSolution {
        reduced_norms: std::array::from_fn(|j| to_f64(&norm_at(j, index[j]))),
        reduced_q_norms: std::array::from_fn(|j| to_f64(&norm_at(j, index[j] + 1))),
        coeffs: coeffs_exact.iter().map(to_f64).collect(),
        precision: Precision::Extended,
        condition: f64::NAN,
    })
}

/// Solve the integer system whose rows are `[A | b]`; `None` if singular.
fn bareiss_solve(mut m: Vec<Vec<BigInt>>) -> Option<Vec<BigRational>> {
    let n = m.len();
    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot = (k..n).find(|&i| !m[i][k].is_zero())?;
        m.swap(k, pivot);
        let (top, bottom) = m.split_at_mut(k + 1);
        let pivot_row = &top[k];
        for row in bottom.iter_mut() {
            let lead = row[k].clone();
            for j in k + 1..=n {
                let v = &row[j] * &pivot_row[k] - &lead * &pivot_row[j];
                row[j] = v / &prev;
            }
            row[k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let mut x = vec![BigRational::zero(); n];
    for k in (0..n).rev() {
        let mut acc = BigRational::from_integer(m[k][n].clone());
        for j in k + 1..n {
            acc -= BigRational::from_integer(m[k][j].clone()) * &x[j];
        }
        x[k] = acc / BigRational::from_integer(m[k][k].clone());
    }
    Some(x)
}

/// Values and derivatives of `P` at `[m, m - e1, m - e2, m - e3]`,
/// evaluated by the nearest-neighbour recurrence
/// `P_{k + e_d} = (z - a_d) P_k - (1/N) sum_l k_l P_{k - e_l}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeValues {
    pub z: Complex64,
    pub index: Index,
    pub values: [Complex64; 4],
    pub derivatives: [Complex64; 4],
}

pub fn lattice_polynomials(fp: &FiniteSizeParams, index: Index, z: Complex64) -> Result<LatticeValues> {
    if index.iter().any(|&k| k == 0) {
        return Err(Error::InvalidParameter(format!("lattice rows need every component of {index:?} positive")));
    }
    let dims = [index[0] + 1, index[1] + 1, index[2] + 1];
    let flat = |k: Index| (k[0] * dims[1] + k[1]) * dims[2] + k[2];
    let size = dims.iter().product();
    let zero = Complex64::new(0.0, 0.0);
    let mut val = vec![zero; size];
    let mut der = vec![zero; size];
    val[0] = Complex64::new(1.0, 0.0);
    let src = fp.sources();
    let inv_n = 1.0 / fp.scaling();
    for total in 1..=index.iter().sum::<usize>() {
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                if i + j > total || total - i - j >= dims[2] {
                    continue;
                }
                let k: Index = [i, j, total - i - j];
                let d = (0..3).find(|&d| k[d] > 0).expect("positive total");
                let mut base = k;
                base[d] -= 1;
                let mut v = (z - src[d]) * val[flat(base)];
                let mut dv = val[flat(base)] + (z - src[d]) * der[flat(base)];
                for l in 0..3 {
                    if base[l] > 0 {
                        let mut low = base;
                        low[l] -= 1;
                        let w = base[l] as f64 * inv_n;
                        v -= w * val[flat(low)];
                        dv -= w * der[flat(low)];
                    }
                }
                val[flat(k)] = v;
                der[flat(k)] = dv;
            }
        }
    }
    let rows = row_indices(index);
    Ok(LatticeValues {
        z,
        index,
        values: rows.map(|k| val[flat(k)]),
        derivatives: rows.map(|k| der[flat(k)]),
    })
}
