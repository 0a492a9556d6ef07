//! Synthetic experiment grid: for every (method, m, sigma, trial) draw a
//! fresh model, measurement map and noise, fit, and record the normalized
//! estimation error.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tuckreg_core::measure::synthesize;
use tuckreg_core::metrics::{normalized_error, summarize_values};
use tuckreg_core::model::gen_model;
use tuckreg_core::rng::derive_seed;
use tuckreg_core::solver::fit;
use tuckreg_core::{Clock, Init, LinearMap, LinearMapSpec, Method, NoClock, SensingDistribution, SolverConfig};

use crate::clock::MonotonicClock;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 10] = [
    "method",
    "m",
    "sigma",
    "trial",
    "seed",
    "normalized_error",
    "iters",
    "stop_reason",
    "wall_time_s",
    "per_iter_time_s",
];

/// Maps with at most this many sensing entries are materialised once per
/// trial instead of being regenerated every iteration (results are identical).
const MATERIALIZE_LIMIT: usize = 1 << 22;

const MODEL_LABEL: u64 = 1;
const MAP_LABEL: u64 = 2;
const NOISE_LABEL: u64 = 3;

/// Per-method solver settings; unset fields keep the solver defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOverrides {
    pub mu: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub lambda: Option<f64>,
    pub init: Option<Init>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
    pub rank: Vec<usize>,
    pub sparsity: Vec<usize>,
    /// Magnitude floor of the generated factor entries.
    pub a: f64,
    pub base_seed: u64,
    pub m_grid: Vec<usize>,
    pub sigma_grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub trials: usize,
    #[serde(default = "default_distribution")]
    pub distribution: SensingDistribution,
    /// Worker threads; 0 uses every available core.
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// When false the timing columns are written as 0 so that repeated runs
    /// produce byte-identical files.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    #[serde(default)]
    pub tpgd: SolverOverrides,
    #[serde(default)]
    pub pgd_tucker: SolverOverrides,
    #[serde(default)]
    pub lasso: SolverOverrides,
}

fn default_distribution() -> SensingDistribution {
    SensingDistribution::Gaussian
}

fn default_threads() -> usize {
    1
}

fn default_true() -> bool {
    true
}

/// l1 weight used by the lasso baseline unless overridden.
pub const DEFAULT_LAMBDA: f64 = 0.01;

impl SweepConfig {
    /// Desk-scale grid: `10 x 10 x 10` tensors, rank 2, sparsity 3, where
    /// the sparse-projection method transitions near `m = 150` and the
    /// Tucker-only baseline near `m = 300`.
    pub fn desk() -> Self {
        Self {
            dims: vec![10, 10, 10],
            rank: vec![2, 2, 2],
            sparsity: vec![3, 3, 3],
            a: 0.5,
            base_seed: 0,
            m_grid: vec![100, 150, 200, 250, 300, 400],
            sigma_grid: vec![0.0],
            methods: vec![Method::Tpgd, Method::PgdTucker],
            trials: 20,
            distribution: SensingDistribution::Gaussian,
            threads: 1,
            record_timing: true,
            tpgd: SolverOverrides::default(),
            pgd_tucker: SolverOverrides::default(),
            lasso: SolverOverrides::default(),
        }
    }

    /// The published configuration (`50 x 50 x 30`, rank 3, sparsity
    /// `(6, 6, 4)`, 50 trials). Hours of compute.
    pub fn paper_scale() -> Self {
        Self {
            dims: vec![50, 50, 30],
            rank: vec![3, 3, 3],
            sparsity: vec![6, 6, 4],
            m_grid: (3..=15).map(|k| 100 * k).collect(),
            sigma_grid: vec![0.1, 0.4, 0.7],
            trials: 50,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::Config(s.into()));
        if self.methods.is_empty() {
            return bad("method list is empty");
        }
        if self.m_grid.is_empty() || self.sigma_grid.is_empty() {
            return bad("m and sigma grids must be nonempty");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.m_grid.contains(&0) {
            return bad("m values must be positive");
        }
        if self.sigma_grid.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return bad("sigma values must be finite and >= 0");
        }
        tuckreg_core::model::check_tuples(&self.dims, &self.rank, &self.sparsity)?;
        if !self.a.is_finite() || self.a < 0.0 {
            return bad("a must be finite and >= 0");
        }
        for &method in &self.methods {
            self.solver(method).validate(&self.dims)?;
        }
        Ok(())
    }

    pub fn overrides(&self, method: Method) -> &SolverOverrides {
        match method {
            Method::Tpgd => &self.tpgd,
            Method::PgdTucker => &self.pgd_tucker,
            Method::Lasso => &self.lasso,
        }
    }

    pub fn solver(&self, method: Method) -> SolverConfig {
        let mut cfg = match method {
            Method::Tpgd => SolverConfig::tpgd(self.rank.clone(), self.sparsity.clone()),
            Method::PgdTucker => SolverConfig::pgd_tucker(self.rank.clone()),
            Method::Lasso => SolverConfig::lasso(DEFAULT_LAMBDA),
        };
        let o = self.overrides(method);
        if let Some(v) = o.mu {
            cfg.mu = v;
        }
        if let Some(v) = o.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = o.tol {
            cfg.tol = v;
        }
        if let Some(v) = o.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = o.init {
            cfg.init = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStop {
    Tol,
    MaxIters,
    Diverged,
}

impl RowStop {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tol => "tol",
            Self::MaxIters => "max_iters",
            Self::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    pub m: usize,
    pub sigma: f64,
    pub trial: usize,
    pub seed: u64,
    /// `+inf` for diverged trials.
    pub normalized_error: f64,
    pub iters: usize,
    pub stop_reason: RowStop,
    pub wall_time_s: f64,
    pub per_iter_time_s: f64,
}

impl SweepRow {
    fn record(&self) -> [String; 10] {
        [
            self.method.name().to_string(),
            self.m.to_string(),
            fmt_f64(self.sigma),
            self.trial.to_string(),
            self.seed.to_string(),
            fmt_f64(self.normalized_error),
            self.iters.to_string(),
            self.stop_reason.name().to_string(),
            fmt_f64(self.wall_time_s),
            fmt_f64(self.per_iter_time_s),
        ]
    }
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or large magnitudes; `inf` for infinity.
fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn method_code(method: Method) -> u64 {
    match method {
        Method::Tpgd => 0,
        Method::PgdTucker => 1,
        Method::Lasso => 2,
    }
}

/// Seed of one trial: a hash of the base seed and the cell coordinates.
pub fn trial_seed(base_seed: u64, method: Method, m: usize, sigma: f64, trial: usize) -> u64 {
    derive_seed(base_seed, &[method_code(method), m as u64, sigma.to_bits(), trial as u64])
}

pub fn canonical_order(a: &SweepRow, b: &SweepRow) -> Ordering {
    a.method
        .cmp(&b.method)
        .then(a.m.cmp(&b.m))
        .then(a.sigma.total_cmp(&b.sigma))
        .then(a.trial.cmp(&b.trial))
}

/// Runs one trial. Divergence is a result, not an error.
pub fn run_trial(cfg: &SweepConfig, method: Method, m: usize, sigma: f64, trial: usize) -> Result<SweepRow> {
    let seed = trial_seed(cfg.base_seed, method, m, sigma, trial);
    let model = gen_model(
        &cfg.dims,
        &cfg.rank,
        &cfg.sparsity,
        cfg.a,
        derive_seed(seed, &[MODEL_LABEL]),
    )?;
    let spec = LinearMapSpec::new(m, cfg.dims.clone(), derive_seed(seed, &[MAP_LABEL]), cfg.distribution)?;
    let data = synthesize(&model, &spec, sigma, derive_seed(seed, &[NOISE_LABEL]))?;
    let solver = cfg.solver(method);

    let clock: Box<dyn Clock> = if cfg.record_timing {
        Box::new(MonotonicClock::new())
    } else {
        Box::new(NoClock)
    };
    let dense;
    let map: &dyn LinearMap = if m.saturating_mul(spec.dims().iter().product()) <= MATERIALIZE_LIMIT {
        dense = spec.materialize();
        &dense
    } else {
        &spec
    };
    let start = clock.now();
    let outcome = fit(map, &data.y, &solver, clock.as_ref());
    let elapsed = clock.now() - start;
    let row = |err: f64, iters: usize, stop: RowStop, total: f64, per: f64| SweepRow {
        method,
        m,
        sigma,
        trial,
        seed,
        normalized_error: err,
        iters,
        stop_reason: stop,
        wall_time_s: total,
        per_iter_time_s: per,
    };
    match outcome {
        Ok(report) => {
            let err = normalized_error(&model.compose(), &report.estimate)?;
            let stop = match report.stop_reason {
                tuckreg_core::StopReason::Tol => RowStop::Tol,
                tuckreg_core::StopReason::MaxIters => RowStop::MaxIters,
            };
            Ok(row(
                err,
                report.iters_run,
                stop,
                report.wall_time_total,
                report.wall_time_per_iter,
            ))
        }
        Err(tuckreg_core::Error::Diverged { iteration, .. }) => {
            let per = if iteration > 0 { elapsed / iteration as f64 } else { 0.0 };
            Ok(row(f64::INFINITY, iteration, RowStop::Diverged, elapsed, per))
        }
        Err(e) => Err(e.into()),
    }
}

/// Runs every trial of the grid on a pool of `cfg.threads` workers and
/// returns the rows in canonical order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    let mut cells = Vec::new();
    for &method in &methods {
        for &m in &cfg.m_grid {
            for &sigma in &cfg.sigma_grid {
                for trial in 0..cfg.trials {
                    cells.push((method, m, sigma, trial));
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut rows = pool.install(|| {
        cells
            .par_iter()
            .map(|&(method, m, sigma, trial)| run_trial(cfg, method, m, sigma, trial))
            .collect::<Result<Vec<_>>>()
    })?;
    rows.sort_by(canonical_order);
    rows.dedup_by(|a, b| canonical_order(a, b) == Ordering::Equal);
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Error percentiles of one `(method, m, sigma)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: Method,
    pub m: usize,
    pub sigma: f64,
    pub trials: usize,
    pub diverged: usize,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
}

pub fn summarize(rows: &[SweepRow]) -> Result<Vec<CellSummary>> {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| canonical_order(a, b));
    let mut out = Vec::new();
    for cell in sorted.chunk_by(|a, b| a.method == b.method && a.m == b.m && a.sigma.total_cmp(&b.sigma).is_eq()) {
        let errors: Vec<f64> = cell.iter().map(|r| r.normalized_error).collect();
        let p = summarize_values(&errors)?;
        out.push(CellSummary {
            method: cell[0].method,
            m: cell[0].m,
            sigma: cell[0].sigma,
            trials: cell.len(),
            diverged: cell.iter().filter(|r| r.stop_reason == RowStop::Diverged).count(),
            p25: p.p25,
            median: p.median,
            p75: p.p75,
        });
    }
    Ok(out)
}

pub fn write_summary_csv<W: Write>(cells: &[CellSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "m", "sigma", "trials", "diverged", "p25", "median", "p75"])?;
    for c in cells {
        w.write_record([
            c.method.name().to_string(),
            c.m.to_string(),
            fmt_f64(c.sigma),
            c.trials.to_string(),
            c.diverged.to_string(),
            fmt_f64(c.p25),
            fmt_f64(c.median),
            fmt_f64(c.p75),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Smallest `m` whose median error is at most `level` for the given method
/// and noise level.
pub fn transition_point(cells: &[CellSummary], method: Method, sigma: f64, level: f64) -> Option<usize> {
    cells
        .iter()
        .filter(|c| c.method == method && c.sigma == sigma && c.median <= level)
        .map(|c| c.m)
        .min()
}
