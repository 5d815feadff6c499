//! Direct sampling of `M = A + X` with `X` from the Gaussian unitary
//! ensemble of variance `1/n`, and comparisons with the limiting density.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::mass_between;
use crate::error::{Error, Result};
use crate::mop::FiniteSizeParams;
use crate::spectral_curve::{Edge, SpectralCurve, SupportData};

const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITER: usize = 10_000;
/// Stream offset used for the single retry of a failed draw.
const RETRY_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n: usize,
    pub a: f64,
    /// Multiplicities of `a`, `0`, `-a` in `A`.
    pub counts: [usize; 3],
    pub seed: u64,
    pub draws: usize,
}

impl EnsembleConfig {
    pub fn new(fp: &FiniteSizeParams, seed: u64, draws: usize) -> Self {
        EnsembleConfig { n: fp.n, a: fp.a, counts: fp.index(), seed, draws }
    }

    /// Any nonnegative `a`, including the degenerate `A = 0`.
    pub fn with_counts(a: f64, counts: [usize; 3], seed: u64, draws: usize) -> Result<Self> {
        let n: usize = counts.iter().sum();
        if n == 0 || !(a.is_finite() && a >= 0.0) {
            return Err(Error::InvalidParameter(format!("need n >= 1 and a >= 0; got {counts:?}, a = {a}")));
        }
        Ok(EnsembleConfig { n, a, counts, seed, draws })
    }

    /// Diagonal of `A`.
    pub fn source_diagonal(&self) -> Vec<f64> {
        let values = [self.a, 0.0, -self.a];
        values.iter().zip(self.counts).flat_map(|(&v, c)| std::iter::repeat_n(v, c)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSample {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub draw_index: u64,
    pub seed_used: u64,
    /// ChaCha stream the draw came from.
    pub stream: u64,
    /// Set when the first attempt failed and the retry stream was used.
    pub retried: bool,
}

fn draw_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `A + X`, upper triangle sampled and mirrored.
pub fn sample_matrix(cfg: &EnsembleConfig, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let n = cfg.n;
    let diag_sd = (1.0 / n as f64).sqrt();
    let off_sd = (0.5 / n as f64).sqrt();
    let source = cfg.source_diagonal();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        let g: f64 = rng.sample(StandardNormal);
        m[(i, i)] = Complex64::from(source[i] + diag_sd * g);
        for j in i + 1..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(off_sd * re, off_sd * im);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

fn eigenvalues_of(m: DMatrix<Complex64>) -> Option<Vec<f64>> {
    let eig = m.try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER)?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Some(values)
}

/// One draw, deterministic in `(seed, draw)`.
pub fn sample_draw(cfg: &EnsembleConfig, draw: u64) -> Result<EigenSample> {
    for (stream, retried) in [(draw, false), (draw | RETRY_STREAM, true)] {
        let mut rng = draw_rng(cfg.seed, stream);
        if let Some(eigenvalues) = eigenvalues_of(sample_matrix(cfg, &mut rng)) {
            return Ok(EigenSample { eigenvalues, draw_index: draw, seed_used: cfg.seed, stream, retried });
        }
    }
    Err(Error::EigenSolverFailure { draw })
}

/// All draws, in draw order, independent of the thread count.
pub fn sample_eigenvalues(cfg: &EnsembleConfig) -> Result<Vec<EigenSample>> {
    if cfg.n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    (0..cfg.draws as u64).into_par_iter().map(|d| sample_draw(cfg, d)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramComparison {
    pub bin_edges: Vec<f64>,
    pub empirical: Vec<f64>,
    pub predicted: Vec<f64>,
    pub max_deviation: f64,
    /// Left, center and right clusters, split at the gap midpoints.
    pub interval_masses: [f64; 3],
    pub predicted_interval_masses: [f64; 3],
    pub outside_fraction: f64,
    pub outside_margin: f64,
    pub eigenvalue_count: usize,
}

/// Cluster of `x`: split at the midpoints of the two gaps.
pub fn cluster_of(support: &SupportData, x: f64) -> usize {
    let cut = 0.5 * (support.z1 + support.z2);
    if x < -cut {
        0
    } else if x <= cut {
        1
    } else {
        2
    }
}

/// Pooled histogram against `int_bin rho`; bins are aligned to multiples of
/// `bin_width` and cover every eigenvalue and the support.
pub fn empirical_density(samples: &[EigenSample], curve: &SpectralCurve, bin_width: f64) -> Result<HistogramComparison> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no draws to pool".into()));
    }
    if !(bin_width > 0.0) {
        return Err(Error::InvalidParameter(format!("bin width {bin_width} must be positive")));
    }
    let support = curve.support;
    let all = samples.iter().flat_map(|s| s.eigenvalues.iter().copied());
    let (lo, hi) = all.clone().fold((-support.z3, support.z3), |(l, h), x| (l.min(x), h.max(x)));
    let first = (lo / bin_width).floor() as i64;
    let last = (hi / bin_width).ceil() as i64;
    let bins = (last - first).max(1) as usize;
    let bin_edges: Vec<f64> = (0..=bins).map(|k| (first + k as i64) as f64 * bin_width).collect();

    let mut counts = vec![0usize; bins];
    let mut clusters = [0usize; 3];
    let mut outside = 0usize;
    let margin = 0.05 * support.z3;
    let mut total = 0usize;
    for x in all {
        let k = (((x / bin_width).floor() as i64 - first).max(0) as usize).min(bins - 1);
        counts[k] += 1;
        clusters[cluster_of(&support, x)] += 1;
        if support.distance_to_support(x) > margin {
            outside += 1;
        }
        total += 1;
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let predicted = bin_edges.par_windows(2).map(|w| mass_between(curve, w[0], w[1])).collect::<Result<Vec<_>>>()?;
    let max_deviation = empirical.iter().zip(&predicted).map(|(e, p)| (e - p).abs()).fold(0.0, f64::max);
    let interval_masses = clusters.map(|c| c as f64 / total as f64);
    let predicted_interval_masses = crate::density::masses(curve)?;
    Ok(HistogramComparison {
        bin_edges,
        empirical,
        predicted,
        max_deviation,
        interval_masses,
        predicted_interval_masses,
        outside_fraction: outside as f64 / total as f64,
        outside_margin: margin,
        eigenvalue_count: total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeStatistics {
    pub edge: Edge,
    pub n: usize,
    /// `s (lambda - e) (rho_e n)^{2/3}` with `s` pointing out of the support.
    pub rescaled: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

/// Extreme eigenvalue of the cluster ending at `edge`, one per draw, in
/// edge units.
pub fn edge_statistics(samples: &[EigenSample], support: &SupportData, edge: Edge) -> EdgeStatistics {
    let location = support.edge_location(edge);
    let orientation = edge.orientation();
    let cluster = cluster_of(support, location - 1e-9 * orientation);
    let n = samples.first().map_or(0, |s| s.eigenvalues.len());
    let stretch = (support.rho_edge(edge) * n as f64).powf(2.0 / 3.0);
    let rescaled: Vec<f64> = samples
        .iter()
        .filter_map(|s| {
            s.eigenvalues
                .iter()
                .copied()
                .filter(|&x| cluster_of(support, x) == cluster)
                .map(|x| orientation * x)
                .max_by(f64::total_cmp)
        })
        .map(|extreme| (extreme - orientation * location) * stretch)
        .collect();
    let count = rescaled.len().max(1) as f64;
    let mean = rescaled.iter().sum::<f64>() / count;
    let variance = rescaled.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (count - 1.0).max(1.0);
    EdgeStatistics { edge, n, rescaled, mean, variance }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(seed: u64) -> EnsembleConfig {
        EnsembleConfig::new(&FiniteSizeParams::from_t(2.0, 0.5, 24).unwrap(), seed, 8)
    }

    #[test]
    fn draws_are_reproducible_and_sorted() {
        let cfg = small_config(7);
        let a = sample_eigenvalues(&cfg).unwrap();
        let b = sample_eigenvalues(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[3], sample_draw(&cfg, 3).unwrap());
        for s in &a {
            assert_eq!(s.eigenvalues.len(), 24);
            assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
        assert_ne!(a[0].eigenvalues, sample_eigenvalues(&small_config(8)).unwrap()[0].eigenvalues);
    }

    #[test]
    fn sampled_matrix_is_hermitian_with_source_diagonal_mean() {
        let cfg = small_config(1);
        let m = sample_matrix(&cfg, &mut draw_rng(1, 0));
        assert_eq!(m.adjoint(), m);
        assert_eq!(cfg.source_diagonal().iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn trace_averages_to_zero() {
        let cfg = EnsembleConfig { draws: 200, ..small_config(3) };
        let traces: Vec<f64> = sample_eigenvalues(&cfg).unwrap().iter().map(|s| s.eigenvalues.iter().sum()).collect();
        let mean = traces.iter().sum::<f64>() / traces.len() as f64;
        // Tr X has variance 1 for every n
        assert!(mean.abs() < 4.0 / (traces.len() as f64).sqrt());
    }

    #[test]
    fn semicircle_without_source() {
        let cfg = EnsembleConfig::with_counts(0.0, [0, 400, 0], 11, 50).unwrap();
        let samples = sample_eigenvalues(&cfg).unwrap();
        let total = (cfg.n * cfg.draws) as f64;
        let outside = samples.iter().flat_map(|s| &s.eigenvalues).filter(|x| x.abs() > 2.1).count() as f64;
        assert!(outside / total < 0.01);
    }

    #[test]
    fn histogram_masses_are_normalized() {
        let curve = SpectralCurve::from_a_t(2.0, 0.5).unwrap();
        let samples = sample_eigenvalues(&small_config(5)).unwrap();
        let h = empirical_density(&samples, &curve, 0.1).unwrap();
        assert!((h.empirical.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((h.predicted.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        assert_eq!(h.bin_edges.len(), h.empirical.len() + 1);
    }

    #[test]
    fn interior_edge_uses_adjacent_cluster() {
        let curve = SpectralCurve::from_a_t(2.0, 0.5).unwrap();
        let samples = sample_eigenvalues(&small_config(9)).unwrap();
        let stats = edge_statistics(&samples, &curve.support, Edge::Z1);
        let cut = 0.5 * (curve.support.z1 + curve.support.z2);
        let stretch = (curve.support.rho_edge(Edge::Z1) * 24.0).powf(2.0 / 3.0);
        for r in &stats.rescaled {
            assert!(curve.support.z1 + r / stretch <= cut);
        }
    }
}
