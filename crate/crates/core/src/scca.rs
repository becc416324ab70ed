//! Sparse canonical correlation analysis: synthetic data, problem, start
//! point and solution metrics.
//!
//! The problem is
//!
//! ```text
//!     min  −w_xᵀΣ_xy w_y + λ(‖w_x‖₁ + ‖w_y‖₁)
//!     s.t. w_xᵀΣ_xx w_x ≤ 1,  w_yᵀΣ_yy w_y ≤ 1
//! ```
//!
//! with slacks `s₁, s₂ ≤ 1` appended after `(w_x, w_y)`.
//!
//! Random numbers come from ChaCha8 seeded by a `u64`, with normals drawn by
//! `rand_distr::StandardNormal` (ziggurat), so data are reproducible across
//! platforms.

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::driver::{solve, SolveError, SolveReport, SolverConfig};
use crate::linalg::{dot, norm2, Cholesky, Mat};
use crate::problem::{
    add_slacks, BoxSet, GeneralProblem, L1Regularizer, ProblemInstance, SmoothFunctions,
};

/// Standard deviation of the noise entries (variance 0.01).
pub const NOISE_STD: f64 = 0.1;
/// Threshold for counting a weight as nonzero.
pub const ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SccaError {
    #[error("n_x = {n_x} and n_y = {n_y} must both be positive multiples of 8")]
    Divisibility { n_x: usize, n_y: usize },
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("lambda must be positive and finite (got {0})")]
    Lambda(f64),
}

#[derive(Clone, Debug)]
pub struct SccaData {
    pub x: Mat<f64>,
    pub y: Mat<f64>,
    pub sxx: Mat<f64>,
    pub syy: Mat<f64>,
    pub sxy: Mat<f64>,
    pub xi_x: Vec<f64>,
    pub xi_y: Vec<f64>,
    pub u: Vec<f64>,
    pub seed: u64,
}

impl SccaData {
    pub fn nx(&self) -> usize {
        self.x.rows()
    }

    pub fn ny(&self) -> usize {
        self.y.rows()
    }
}

/// `X = ([e; −e; 0] + ξ_x)uᵀ`, `Y = ([0; e; −e] + ξ_y)uᵀ` with `e` of length
/// `n/8`, `u ~ N(0, I)` and `ξ ~ N(0, 0.01·I)`.
pub fn scca_generate(
    n_x: usize,
    n_y: usize,
    samples: usize,
    seed: u64,
) -> Result<SccaData, SccaError> {
    scca_generate_with_noise(n_x, n_y, samples, seed, NOISE_STD)
}

pub fn scca_generate_with_noise(
    n_x: usize,
    n_y: usize,
    samples: usize,
    seed: u64,
    noise_std: f64,
) -> Result<SccaData, SccaError> {
    if n_x == 0 || n_y == 0 || n_x % 8 != 0 || n_y % 8 != 0 {
        return Err(SccaError::Divisibility { n_x, n_y });
    }
    if samples == 0 {
        return Err(SccaError::NoSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let u: Vec<f64> = (0..samples).map(|_| normal()).collect();
    let xi_x: Vec<f64> = (0..n_x).map(|_| noise_std * normal()).collect();
    let xi_y: Vec<f64> = (0..n_y).map(|_| noise_std * normal()).collect();
    let (ex, ey) = (n_x / 8, n_y / 8);
    let ax: Vec<f64> = (0..n_x)
        .map(|i| {
            let base = if i < ex {
                1.0
            } else if i < 2 * ex {
                -1.0
            } else {
                0.0
            };
            base + xi_x[i]
        })
        .collect();
    let ay: Vec<f64> = (0..n_y)
        .map(|i| {
            let base = if i >= n_y - ey {
                -1.0
            } else if i >= n_y - 2 * ey {
                1.0
            } else {
                0.0
            };
            base + xi_y[i]
        })
        .collect();
    let outer = |a: &[f64]| {
        let mut m = Mat::zeros(a.len(), samples);
        for (i, &ai) in a.iter().enumerate() {
            for (j, &uj) in u.iter().enumerate() {
                m[(i, j)] = ai * uj;
            }
        }
        m
    };
    let x = outer(&ax);
    let y = outer(&ay);
    let sxx = x.mul_transpose(&x);
    let syy = y.mul_transpose(&y);
    let sxy = x.mul_transpose(&y);
    Ok(SccaData {
        x,
        y,
        sxx,
        syy,
        sxy,
        xi_x,
        xi_y,
        u,
        seed,
    })
}

/// Sample variance of the noise entries of both blocks.
pub fn noise_variance(data: &SccaData) -> f64 {
    let all: Vec<f64> = data.xi_x.iter().chain(&data.xi_y).copied().collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    all.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (all.len() - 1) as f64
}

struct SccaFunctions {
    sxx: Mat<f64>,
    syy: Mat<f64>,
    sxy: Mat<f64>,
    nx: usize,
}

impl SccaFunctions {
    fn split<'a>(&self, w: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        w.split_at(self.nx)
    }
}

impl SmoothFunctions<f64> for SccaFunctions {
    fn dim(&self) -> usize {
        self.nx + self.syy.rows()
    }

    fn num_constraints(&self) -> usize {
        2
    }

    fn objective(&self, w: &[f64]) -> f64 {
        let (wx, wy) = self.split(w);
        -dot(wx, &self.sxy.mul_vec(wy))
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let (wx, wy) = self.split(w);
        let mut g: Vec<f64> = self.sxy.mul_vec(wy).iter().map(|v| -v).collect();
        g.extend(self.sxy.tr_mul_vec(wx).iter().map(|v| -v));
        g
    }

    fn constraints(&self, w: &[f64]) -> Vec<f64> {
        let (wx, wy) = self.split(w);
        vec![
            dot(wx, &self.sxx.mul_vec(wx)),
            dot(wy, &self.syy.mul_vec(wy)),
        ]
    }

    fn jacobian(&self, w: &[f64]) -> Mat<f64> {
        let (wx, wy) = self.split(w);
        let n = self.dim();
        let mut j = Mat::zeros(2, n);
        for (i, v) in self.sxx.mul_vec(wx).iter().enumerate() {
            j[(0, i)] = 2.0 * v;
        }
        for (i, v) in self.syy.mul_vec(wy).iter().enumerate() {
            j[(1, self.nx + i)] = 2.0 * v;
        }
        j
    }
}

/// The SCCA instance over `(w_x, w_y, s₁, s₂)`.
pub fn scca_problem(data: &SccaData, lambda: f64) -> Result<ProblemInstance<f64>, SccaError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(SccaError::Lambda(lambda));
    }
    let nx = data.nx();
    let ny = data.ny();
    let funcs = SccaFunctions {
        sxx: data.sxx.clone(),
        syy: data.syy.clone(),
        sxy: data.sxy.clone(),
        nx,
    };
    let gp = GeneralProblem {
        name: format!("scca-n{nx}-lambda{lambda:e}-seed{}", data.seed),
        functions: Arc::new(funcs),
        num_eq: 0,
        reg: L1Regularizer::uniform(nx + ny, lambda).expect("positive lambda"),
        bounds: BoxSet::free(nx + ny),
        ineq_lower: vec![f64::NEG_INFINITY; 2],
        ineq_upper: vec![1.0; 2],
    };
    Ok(add_slacks(gp).expect("scca dimensions"))
}

/// `1e-8·trace(Σ)/n`.
pub fn default_ridge(sigma: &Mat<f64>) -> f64 {
    let n = sigma.rows();
    let trace: f64 = (0..n).map(|i| sigma[(i, i)]).sum();
    1e-8 * trace / n as f64
}

#[derive(Clone, Debug)]
pub struct SccaInit {
    pub x0: Vec<f64>,
    pub correlation: f64,
    pub iterations: usize,
    pub fallback: bool,
}

fn ridge_cholesky(sigma: &Mat<f64>, ridge: f64) -> Option<Cholesky<f64>> {
    let mut s = sigma.clone();
    for i in 0..s.rows() {
        s[(i, i)] += ridge;
    }
    Cholesky::factor(&s)
}

fn whiten_back(ch: &Cholesky<f64>, b: &[f64]) -> Vec<f64> {
    ch.solve_upper(b)
}

fn whiten(ch: &Cholesky<f64>, b: &[f64]) -> Vec<f64> {
    ch.solve_lower(b)
}

/// Leading canonical pair of the ridge-regularized covariances by power
/// iteration on the whitened cross-covariance `L_x⁻¹ Σ_xy L_y⁻ᵀ`, rescaled to
/// unit variances; slacks start at 1. With `ridge = None` the default
/// ridge of each block is used.
pub fn scca_init(data: &SccaData, ridge: Option<f64>) -> SccaInit {
    let nx = data.nx();
    let ny = data.ny();
    let rx = ridge.unwrap_or_else(|| default_ridge(&data.sxx));
    let ry = ridge.unwrap_or_else(|| default_ridge(&data.syy));
    let fallback = |iterations| {
        log::warn!("scca init: power iteration failed, using normalized ones");
        let wx = unit_variance(&vec![1.0; nx], &data.sxx);
        let wy = unit_variance(&vec![1.0; ny], &data.syy);
        let correlation = dot(&wx, &data.sxy.mul_vec(&wy));
        let mut x0 = wx;
        x0.extend(wy);
        x0.extend([1.0, 1.0]);
        SccaInit {
            x0,
            correlation,
            iterations,
            fallback: true,
        }
    };
    let (Some(lx), Some(ly)) = (ridge_cholesky(&data.sxx, rx), ridge_cholesky(&data.syy, ry))
    else {
        return fallback(0);
    };
    // M q = L_x⁻¹ Σ_xy L_y⁻ᵀ q, Mᵀ p = L_y⁻¹ Σ_xyᵀ L_x⁻ᵀ p
    let apply = |q: &[f64]| whiten(&lx, &data.sxy.mul_vec(&whiten_back(&ly, q)));
    let apply_t = |p: &[f64]| whiten(&ly, &data.sxy.tr_mul_vec(&whiten_back(&lx, p)));
    let mut q = vec![1.0 / (ny as f64).sqrt(); ny];
    let mut sigma_prev = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    let mut p = vec![0.0; nx];
    for it in 1..=1000 {
        iterations = it;
        p = apply(&q);
        let np = norm2(&p);
        if !(np > 0.0) || !np.is_finite() {
            break;
        }
        p.iter_mut().for_each(|v| *v /= np);
        let mut qn = apply_t(&p);
        let sigma = norm2(&qn);
        if !(sigma > 0.0) || !sigma.is_finite() {
            break;
        }
        qn.iter_mut().for_each(|v| *v /= sigma);
        let change: f64 = qn
            .iter()
            .zip(&q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        q = qn;
        if (sigma - sigma_prev).abs() <= 1e-12 * sigma && change <= 1e-10 {
            converged = true;
            break;
        }
        sigma_prev = sigma;
    }
    if !converged {
        return fallback(iterations);
    }
    let wx = unit_variance(&whiten_back(&lx, &p), &data.sxx);
    let wy = unit_variance(&whiten_back(&ly, &q), &data.syy);
    let mut wy = wy;
    let mut correlation = dot(&wx, &data.sxy.mul_vec(&wy));
    if correlation < 0.0 {
        wy.iter_mut().for_each(|v| *v = -*v);
        correlation = -correlation;
    }
    let mut x0 = wx;
    x0.extend(wy);
    x0.extend([1.0, 1.0]);
    SccaInit {
        x0,
        correlation,
        iterations,
        fallback: false,
    }
}

fn unit_variance(w: &[f64], sigma: &Mat<f64>) -> Vec<f64> {
    let v = dot(w, &sigma.mul_vec(w));
    if v > 0.0 {
        let s = v.sqrt();
        w.iter().map(|a| a / s).collect()
    } else {
        w.to_vec()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SccaMetrics {
    pub rho_xy: f64,
    /// Set when a variance term vanishes and `ρ` is reported as 0.
    pub rho_undefined: bool,
    pub sr_x: f64,
    pub sr_y: f64,
    pub sr: f64,
    pub sl: usize,
    pub voc_x: f64,
    pub voc_y: f64,
    /// Seconds spent producing the weights; 0 when not timed.
    pub wall_time: f64,
}

fn nnz(w: &[f64], zero_tol: f64) -> usize {
    w.iter().filter(|v| v.abs() > zero_tol).count()
}

/// Correlation, sparsity ratios, sparsity level and variance violations.
/// `sl` counts nonzeros of `w_x` outside its first `n_x/4` entries and of
/// `w_y` outside its last `n_y/4` entries.
pub fn scca_metrics(wx: &[f64], wy: &[f64], data: &SccaData, zero_tol: f64) -> SccaMetrics {
    let (nx, ny) = (wx.len(), wy.len());
    let vx = dot(wx, &data.sxx.mul_vec(wx));
    let vy = dot(wy, &data.syy.mul_vec(wy));
    let cross = dot(wx, &data.sxy.mul_vec(wy));
    let denom = (vx * vy).sqrt();
    let (rho_xy, rho_undefined) = if denom > 0.0 {
        (cross / denom, false)
    } else {
        (0.0, true)
    };
    let (kx, ky) = (nnz(wx, zero_tol), nnz(wy, zero_tol));
    let sl = nnz(&wx[nx / 4..], zero_tol) + nnz(&wy[..ny - ny / 4], zero_tol);
    SccaMetrics {
        rho_xy,
        rho_undefined,
        sr_x: (nx - kx) as f64 / nx as f64,
        sr_y: (ny - ky) as f64 / ny as f64,
        sr: ((nx + ny) - (kx + ky)) as f64 / (nx + ny) as f64,
        sl,
        voc_x: (vx - 1.0).max(0.0),
        voc_y: (vy - 1.0).max(0.0),
        wall_time: 0.0,
    }
}

#[derive(Clone, Debug)]
pub struct SccaRun {
    pub report: SolveReport<f64>,
    pub metrics: SccaMetrics,
    pub init: SccaInit,
}

/// Builds the instance, computes the CCA start and solves. The metric wall
/// time covers initialization and solve.
pub fn solve_scca(
    data: &SccaData,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<SccaRun, SccaRunError> {
    let start = Instant::now();
    let problem = scca_problem(data, lambda)?;
    let init = scca_init(data, None);
    let report = solve(&problem, &init.x0, cfg)?;
    let (nx, ny) = (data.nx(), data.ny());
    let mut metrics = scca_metrics(&report.x[..nx], &report.x[nx..nx + ny], data, ZERO_TOL);
    metrics.wall_time = start.elapsed().as_secs_f64();
    Ok(SccaRun {
        report,
        metrics,
        init,
    })
}

#[derive(Debug, Error)]
pub enum SccaRunError {
    #[error(transparent)]
    Data(#[from] SccaError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{check_derivatives, default_fd_step};

    #[test]
    fn sizes_and_divisibility() {
        let d = scca_generate(200, 200, 200, 1).unwrap();
        assert_eq!((d.x.rows(), d.x.cols()), (200, 200));
        assert_eq!((d.y.rows(), d.y.cols()), (200, 200));
        assert!(scca_generate(12, 16, 10, 0).is_err());
        assert!(scca_generate(16, 16, 0, 0).is_err());
        let p = scca_problem(&d, 1e-2).unwrap();
        assert_eq!((p.n(), p.m()), (402, 2));
    }

    #[test]
    fn noiseless_data_has_exact_block_pattern() {
        let d = scca_generate_with_noise(16, 16, 5, 3, 0.0).unwrap();
        for j in 0..5 {
            let u = d.u[j];
            let col_x: Vec<f64> = (0..16).map(|i| d.x[(i, j)]).collect();
            let col_y: Vec<f64> = (0..16).map(|i| d.y[(i, j)]).collect();
            assert_eq!(&col_x[..2], &[u, u]);
            assert_eq!(&col_x[2..4], &[-u, -u]);
            assert!(col_x[4..].iter().all(|&v| v == 0.0));
            assert!(col_y[..12].iter().all(|&v| v == 0.0));
            assert_eq!(&col_y[12..14], &[u, u]);
            assert_eq!(&col_y[14..], &[-u, -u]);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = scca_generate(16, 16, 8, 42).unwrap();
        let b = scca_generate(16, 16, 8, 42).unwrap();
        let c = scca_generate(16, 16, 8, 43).unwrap();
        assert_eq!(a.x.as_slice(), b.x.as_slice());
        assert_ne!(a.x.as_slice(), c.x.as_slice());
    }

    #[test]
    fn noise_variance_near_nominal() {
        for seed in 0..5 {
            let d = scca_generate(200, 200, 200, seed).unwrap();
            let v = noise_variance(&d);
            assert!((v - 0.01).abs() <= 0.2 * 0.01, "seed {seed}: {v}");
        }
    }

    #[test]
    fn evaluation_at_origin() {
        let d = scca_generate(16, 16, 16, 0).unwrap();
        let p = scca_problem(&d, 0.1).unwrap();
        let mut x = vec![0.0; 34];
        x[32] = 0.3;
        x[33] = 0.7;
        assert_eq!(p.objective(&x), 0.0);
        assert_eq!(p.constraints(&x), vec![-0.3, -0.7]);
        assert_eq!(p.bounds().upper()[32], 1.0);
        assert_eq!(p.regularizer().weights()[33], 0.0);
        assert_eq!(p.regularizer().weights()[0], 0.1);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let d = scca_generate(24, 24, 24, 5).unwrap();
        let p = scca_problem(&d, 1e-2).unwrap();
        let init = scca_init(&d, None);
        let rep = check_derivatives(&p, &init.x0, default_fd_step(&init.x0)).unwrap();
        assert!(rep.max_error() <= 1e-6, "{rep:?}");
    }

    #[test]
    fn init_recovers_rank_one_direction() {
        let d = scca_generate_with_noise(16, 16, 10, 9, 0.0).unwrap();
        let init = scca_init(&d, None);
        assert!(!init.fallback);
        assert!((init.correlation - 1.0).abs() < 1e-8);
        let (wx, rest) = init.x0.split_at(16);
        let (wy, s) = rest.split_at(16);
        let m = scca_metrics(wx, wy, &d, ZERO_TOL);
        assert!((m.rho_xy - 1.0).abs() < 1e-8);
        // w_x ∝ [e; −e; 0] up to the ridge
        let ratio = wx[0];
        for i in 0..4 {
            let pat = if i < 2 { 1.0 } else { -1.0 };
            assert!((wx[i] - pat * ratio).abs() < 1e-6 * ratio.abs());
        }
        assert!(wx[4..].iter().all(|v| v.abs() < 1e-6 * ratio.abs()));
        assert_eq!(s, &[1.0, 1.0]);
    }

    #[test]
    fn init_has_unit_variances() {
        let d = scca_generate(200, 200, 200, 11).unwrap();
        let init = scca_init(&d, None);
        let (wx, rest) = init.x0.split_at(200);
        let wy = &rest[..200];
        assert!((dot(wx, &d.sxx.mul_vec(wx)) - 1.0).abs() <= 1e-8);
        assert!((dot(wy, &d.syy.mul_vec(wy)) - 1.0).abs() <= 1e-8);
        assert_eq!(scca_init(&d, None).x0, init.x0);
    }

    #[test]
    fn metrics_examples() {
        let d = scca_generate(16, 16, 16, 2).unwrap();
        let mut wx = vec![0.0; 16];
        let mut wy = vec![0.0; 16];
        wx[0] = 1.0;
        wy[15] = 1.0;
        let m = scca_metrics(&wx, &wy, &d, ZERO_TOL);
        assert_eq!(m.sl, 0);
        assert_eq!(m.sr_x, 15.0 / 16.0);
        assert_eq!(m.sr, 30.0 / 32.0);
        wx[4] = 1e-3;
        wy[0] = 1.0;
        assert_eq!(scca_metrics(&wx, &wy, &d, ZERO_TOL).sl, 2);
        wx[4] = 1e-9;
        assert_eq!(scca_metrics(&wx, &wy, &d, ZERO_TOL).sl, 1);
        let m = scca_metrics(&[0.0; 16], &wy, &d, ZERO_TOL);
        assert_eq!(m.wall_time, 0.0);
        assert_eq!(m.sr_x, 1.0);
        assert!(m.rho_undefined);
        assert_eq!(m.rho_xy, 0.0);
    }

    #[test]
    fn objective_matches_correlation_at_unit_variance() {
        let d = scca_generate(16, 16, 16, 4).unwrap();
        let lambda = 0.05;
        let p = scca_problem(&d, lambda).unwrap();
        let init = scca_init(&d, None);
        let (wx, rest) = init.x0.split_at(16);
        let wy = &rest[..16];
        let m = scca_metrics(wx, wy, &d, ZERO_TOL);
        let l1: f64 = init.x0[..32].iter().map(|v| v.abs()).sum();
        let total = p.objective(&init.x0) + p.reg_value(&init.x0);
        assert!((total - (-m.rho_xy + lambda * l1)).abs() <= 1e-12 * (1.0 + total.abs()));
    }
}
