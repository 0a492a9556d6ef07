//! Projected gradient solvers for `min 0.5 ||y - X(B)||^2` over structured
//! tensors, plus an l1-penalised baseline on the vectorised problem.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::measure::LinearMap;
use crate::model::{check_tuples, TuckerFactors};
use crate::projection::{project_sparse_hosvd, project_tucker, ProjectionConfig, SparsePcaOptions};
use crate::rng;
use crate::tensor::{dot, l1_norm, norm2, DenseTensor};

/// Abort when the loss grows beyond this multiple of its starting value.
const DIVERGENCE_FACTOR: f64 = 1e6;
/// Power iterations used to estimate `||X||^2` for the l1 baseline.
const LIPSCHITZ_ITERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    /// Projection onto rank-and-sparsity structured tensors (sparse HOSVD).
    Tpgd,
    /// Projection onto low Tucker rank tensors (truncated HOSVD).
    PgdTucker,
    /// Iterative soft-thresholding on the vectorised coefficients.
    Lasso,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tpgd => "tpgd",
            Self::PgdTucker => "pgd_tucker",
            Self::Lasso => "lasso",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tpgd" => Ok(Self::Tpgd),
            "pgd_tucker" | "pgd-tucker" => Ok(Self::PgdTucker),
            "lasso" => Ok(Self::Lasso),
            other => Err(invalid!("unknown method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Init {
    #[default]
    Zero,
    /// Projection of `X*(y)`.
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    pub method: Method,
    /// Gradient step for the projected methods. The l1 baseline ignores it
    /// and uses `0.9 / ||X||^2` instead.
    pub mu: f64,
    pub max_iters: usize,
    /// Stop when `|L_k - L_{k+1}| <= tol * max(L_k, eps)`.
    pub tol: f64,
    pub rank: Vec<usize>,
    pub sparsity: Vec<usize>,
    pub lambda: f64,
    pub pca: SparsePcaOptions,
    pub init: Init,
}

impl SolverConfig {
    pub fn new(method: Method, rank: Vec<usize>, sparsity: Vec<usize>) -> Self {
        Self {
            method,
            mu: 1.0,
            max_iters: 500,
            tol: 1e-8,
            rank,
            sparsity,
            lambda: 0.0,
            pca: SparsePcaOptions::default(),
            init: Init::Zero,
        }
    }

    pub fn tpgd(rank: Vec<usize>, sparsity: Vec<usize>) -> Self {
        Self::new(Method::Tpgd, rank, sparsity)
    }

    pub fn pgd_tucker(rank: Vec<usize>) -> Self {
        Self::new(Method::PgdTucker, rank, Vec::new())
    }

    pub fn lasso(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::new(Method::Lasso, Vec::new(), Vec::new())
        }
    }

    /// Checks the step, tolerance, iteration cap and the tuples against `dims`.
    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(invalid!("step size must be positive, got {}", self.mu));
        }
        if !(self.tol >= 0.0) {
            return Err(invalid!("tolerance must be >= 0, got {}", self.tol));
        }
        if self.max_iters == 0 {
            return Err(invalid!("max_iters must be at least 1"));
        }
        match self.method {
            Method::Tpgd => check_tuples(dims, &self.rank, &self.sparsity),
            Method::PgdTucker => check_tuples(dims, &self.rank, dims),
            Method::Lasso => {
                if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
                    return Err(invalid!("lambda must be finite and >= 0, got {}", self.lambda));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StopReason {
    Tol,
    MaxIters,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tol => "tol",
            Self::MaxIters => "max_iters",
        }
    }
}

/// Source of wall-clock seconds. The core has no clock of its own.
pub trait Clock {
    fn now(&self) -> f64;
}

/// A clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub method: Method,
    pub estimate: DenseTensor,
    /// Present for the projected methods.
    pub factors: Option<TuckerFactors>,
    /// `0.5 ||y - X(B^k)||^2` for `k = 0..=iters_run`.
    pub residuals: Vec<f64>,
    /// Objective being minimised per iterate (equals `residuals` except for
    /// the l1 baseline, where `lambda ||b||_1` is added).
    pub objective: Vec<f64>,
    pub iters_run: usize,
    pub stop_reason: StopReason,
    pub step_size: f64,
    pub wall_time_total: f64,
    pub wall_time_per_iter: f64,
}

fn half_sq(r: &[f64]) -> f64 {
    0.5 * dot(r, r)
}

fn check_loss(loss: f64, initial: f64, iteration: usize) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::Diverged {
            iteration,
            reason: format!("non-finite residual {loss}"),
        });
    }
    if initial > 0.0 && loss > DIVERGENCE_FACTOR * initial {
        return Err(Error::Diverged {
            iteration,
            reason: format!("residual {loss:e} exceeds {DIVERGENCE_FACTOR:e} x initial {initial:e}"),
        });
    }
    Ok(())
}

fn converged(prev: f64, cur: f64, tol: f64) -> bool {
    (prev - cur).abs() <= tol * prev.max(f64::EPSILON)
}

fn project(t: &DenseTensor, cfg: &SolverConfig) -> Result<TuckerFactors> {
    match cfg.method {
        Method::Tpgd => {
            let pc = ProjectionConfig {
                rank: cfg.rank.clone(),
                sparsity: cfg.sparsity.clone(),
                pca: cfg.pca,
            };
            project_sparse_hosvd(t, &pc)
        }
        Method::PgdTucker => project_tucker(t, &cfg.rank),
        Method::Lasso => unreachable!("the l1 baseline has no projection"),
    }
}

fn check_y<M: LinearMap + ?Sized>(map: &M, y: &[f64]) -> Result<()> {
    if y.len() != map.m() {
        return Err(Error::ShapeMismatch(format!(
            "response has length {}, map has m = {}",
            y.len(),
            map.m()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(invalid!("response vector has non-finite entries"));
    }
    Ok(())
}

/// Runs the method selected in `cfg`.
pub fn fit<M: LinearMap + ?Sized>(map: &M, y: &[f64], cfg: &SolverConfig, clock: &dyn Clock) -> Result<FitReport> {
    check_y(map, y)?;
    cfg.validate(map.dims())?;
    match cfg.method {
        Method::Tpgd | Method::PgdTucker => projected_gradient(map, y, cfg, clock),
        Method::Lasso => ista(map, y, cfg, clock),
    }
}

/// Tensor projected gradient descent with the sparse HOSVD projection.
pub fn tpgd<M: LinearMap + ?Sized>(map: &M, y: &[f64], cfg: &SolverConfig) -> Result<FitReport> {
    let cfg = SolverConfig {
        method: Method::Tpgd,
        ..cfg.clone()
    };
    fit(map, y, &cfg, &NoClock)
}

/// The same loop with the truncated HOSVD projection (sparsity = dims).
pub fn pgd_tucker<M: LinearMap + ?Sized>(map: &M, y: &[f64], cfg: &SolverConfig) -> Result<FitReport> {
    let cfg = SolverConfig {
        method: Method::PgdTucker,
        ..cfg.clone()
    };
    fit(map, y, &cfg, &NoClock)
}

pub fn lasso_ista<M: LinearMap + ?Sized>(map: &M, y: &[f64], cfg: &SolverConfig) -> Result<FitReport> {
    let cfg = SolverConfig {
        method: Method::Lasso,
        ..cfg.clone()
    };
    fit(map, y, &cfg, &NoClock)
}

fn projected_gradient<M: LinearMap + ?Sized>(
    map: &M,
    y: &[f64],
    cfg: &SolverConfig,
    clock: &dyn Clock,
) -> Result<FitReport> {
    let dims = map.dims().to_vec();
    let start = clock.now();
    let mut factors = match cfg.init {
        Init::Zero => match cfg.method {
            Method::PgdTucker => TuckerFactors::zero(&dims, &cfg.rank, &dims)?,
            _ => TuckerFactors::zero(&dims, &cfg.rank, &cfg.sparsity)?,
        },
        Init::Spectral => project(&map.adjoint(y)?, cfg)?,
    };
    let mut estimate = factors.compose();
    let (mut resid, mut grad) = map.residual_and_gradient(&estimate, y)?;
    let initial = half_sq(&resid);
    check_loss(initial, initial, 0)?;
    let mut residuals = vec![initial];
    let mut stop_reason = StopReason::MaxIters;
    let mut iters = 0;

    if initial == 0.0 || grad.is_zero() {
        stop_reason = StopReason::Tol;
    } else {
        for k in 1..=cfg.max_iters {
            let mut step = estimate;
            step.axpy(-cfg.mu, &grad)?;
            factors = project(&step, cfg)?;
            estimate = factors.compose();
            (resid, grad) = map.residual_and_gradient(&estimate, y)?;
            let loss = half_sq(&resid);
            check_loss(loss, initial, k)?;
            let prev = *residuals.last().expect("non-empty");
            residuals.push(loss);
            iters = k;
            if converged(prev, loss, cfg.tol) {
                stop_reason = StopReason::Tol;
                break;
            }
        }
    }
    let total = clock.now() - start;
    Ok(FitReport {
        method: cfg.method,
        estimate,
        factors: Some(factors),
        objective: residuals.clone(),
        residuals,
        iters_run: iters,
        stop_reason,
        step_size: cfg.mu,
        wall_time_total: total,
        wall_time_per_iter: total / iters.max(1) as f64,
    })
}

/// `sign(x) max(|x| - t, 0)`.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Power-method estimate of the largest eigenvalue of `X* X`.
pub fn operator_norm_sq<M: LinearMap + ?Sized>(map: &M, iters: usize) -> Result<f64> {
    let n: usize = map.dims().iter().product();
    let mut rng = rng::stream(0x4C49_5053, &[]);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut est = 0.0;
    for _ in 0..iters.max(1) {
        let nv = norm2(&v);
        if nv == 0.0 {
            return Ok(0.0);
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let z = DenseTensor::from_parts(map.dims().to_vec(), v);
        let w = map.adjoint(&map.apply(&z)?)?;
        est = dot(z.data(), w.data());
        v = w.into_data();
    }
    Ok(est)
}

fn ista<M: LinearMap + ?Sized>(map: &M, y: &[f64], cfg: &SolverConfig, clock: &dyn Clock) -> Result<FitReport> {
    let dims = map.dims().to_vec();
    let start = clock.now();
    let lip = operator_norm_sq(map, LIPSCHITZ_ITERS)?;
    let mu = if lip > 0.0 { 0.9 / lip } else { 1.0 };
    let thresh = mu * cfg.lambda;

    let mut b = DenseTensor::zeros(&dims)?;
    let (mut resid, mut grad) = map.residual_and_gradient(&b, y)?;
    let initial = half_sq(&resid);
    check_loss(initial, initial, 0)?;
    let mut residuals = vec![initial];
    let mut objective = vec![initial];
    let mut stop_reason = StopReason::MaxIters;
    let mut iters = 0;

    if initial == 0.0 || grad.is_zero() {
        stop_reason = StopReason::Tol;
    } else {
        for k in 1..=cfg.max_iters {
            for (bi, gi) in b.data_mut().iter_mut().zip(grad.data()) {
                *bi = soft_threshold(*bi - mu * gi, thresh);
            }
            (resid, grad) = map.residual_and_gradient(&b, y)?;
            let loss = half_sq(&resid);
            check_loss(loss, initial, k)?;
            let obj = loss + cfg.lambda * l1_norm(&b);
            let prev = *objective.last().expect("non-empty");
            residuals.push(loss);
            objective.push(obj);
            iters = k;
            if converged(prev, obj, cfg.tol) {
                stop_reason = StopReason::Tol;
                break;
            }
        }
    }
    let total = clock.now() - start;
    Ok(FitReport {
        method: Method::Lasso,
        estimate: b,
        factors: None,
        residuals,
        objective,
        iters_run: iters,
        stop_reason,
        step_size: mu,
        wall_time_total: total,
        wall_time_per_iter: total / iters.max(1) as f64,
    })
}

/// Empirical linear rate of a residual trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceFit {
    /// `exp(slope)` of the least-squares line through `(k, ln L_k)`.
    pub gamma_hat: f64,
    /// Coefficient of determination of that line.
    pub r2: f64,
    /// Number of trace points used.
    pub points: usize,
}

/// Fits `ln L_k ~ a + k ln(gamma)` over the leading segment of the trace whose
/// values stay above ten times the final floor.
pub fn convergence_rate(residuals: &[f64]) -> Result<ConvergenceFit> {
    let floor = match residuals.last() {
        Some(&f) => f,
        None => return Err(Error::TooFewPoints { found: 0 }),
    };
    let segment: Vec<f64> = residuals
        .iter()
        .copied()
        .take_while(|&r| r.is_finite() && r > 0.0 && r > 10.0 * floor)
        .collect();
    if segment.len() < 3 {
        if segment.is_empty() && residuals.len() >= 3 {
            return Err(Error::NoDecay);
        }
        return Err(Error::TooFewPoints { found: segment.len() });
    }
    let n = segment.len() as f64;
    let xs: Vec<f64> = (0..segment.len()).map(|k| k as f64).collect();
    let ys: Vec<f64> = segment.iter().map(|&r| libm::log(r)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(ConvergenceFit {
        gamma_hat: libm::exp(slope),
        r2,
        points: segment.len(),
    })
}
