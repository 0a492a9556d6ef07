//! On-disk layouts: model bundles, datasets and fit outputs. Each is a
//! directory holding a JSON manifest next to TNSR or raw binary payloads.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use tuckreg_core::measure::synthesize;
use tuckreg_core::solver::convergence_rate;
use tuckreg_core::{FitReport, LinearMapSpec, Method, RegressionDataset, SensingDistribution, StopReason, TuckerFactors};

use crate::error::{Error, Result};
use crate::tnsr;

pub const MANIFEST: &str = "manifest.json";

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub dims: Vec<usize>,
    pub rank: Vec<usize>,
    pub sparsity: Vec<usize>,
    /// Generator magnitude floor; absent for fitted models.
    pub a: Option<f64>,
    /// Generator seed; absent for fitted models.
    pub seed: Option<u64>,
}

fn factor_file(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("factor_{}.tnsr", k + 1))
}

/// Writes `core.tnsr`, `factor_1.tnsr` .. `factor_d.tnsr` and the manifest.
pub fn write_model(dir: &Path, model: &TuckerFactors, a: Option<f64>, seed: Option<u64>) -> Result<()> {
    create_dir(dir)?;
    tnsr::write(&dir.join("core.tnsr"), model.core())?;
    for (k, u) in model.factors().iter().enumerate() {
        tnsr::write_matrix(&factor_file(dir, k), u)?;
    }
    let manifest = ModelManifest {
        dims: model.dims().to_vec(),
        rank: model.rank().to_vec(),
        sparsity: model.sparsity().to_vec(),
        a,
        seed,
    };
    write_json(&dir.join(MANIFEST), &manifest)
}

pub fn read_model(dir: &Path) -> Result<(TuckerFactors, ModelManifest)> {
    let manifest: ModelManifest = read_json(&dir.join(MANIFEST))?;
    let core = tnsr::read(&dir.join("core.tnsr"))?;
    let factors = (0..manifest.dims.len())
        .map(|k| tnsr::read_matrix(&factor_file(dir, k)))
        .collect::<Result<Vec<_>>>()?;
    let model = TuckerFactors::new(core, factors, manifest.sparsity.clone())?;
    if model.dims() != manifest.dims.as_slice() || model.rank() != manifest.rank.as_slice() {
        return Err(Error::format(dir, "payload shapes disagree with the manifest"));
    }
    Ok((model, manifest))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub m: usize,
    pub dims: Vec<usize>,
    pub seed: u64,
    pub distribution: SensingDistribution,
    pub sigma: f64,
    pub noise_seed: u64,
    /// Model bundle the responses were generated from, if any.
    pub model_ref: Option<PathBuf>,
}

const RESPONSES: &str = "y.bin";

/// Generates responses for the model bundle in `model_dir` and stores them
/// in `out`. Sensing tensors are never written; the manifest regenerates them.
pub fn generate_dataset(
    model_dir: &Path,
    m: usize,
    seed: u64,
    distribution: SensingDistribution,
    sigma: f64,
    noise_seed: u64,
    out: &Path,
) -> Result<RegressionDataset> {
    let (model, _) = read_model(model_dir)?;
    let map = LinearMapSpec::new(m, model.dims().to_vec(), seed, distribution)?;
    let data = synthesize(&model, &map, sigma, noise_seed)?;
    let model_ref = fs::canonicalize(model_dir).map_err(|e| Error::io(model_dir, e))?;
    write_dataset(out, &data, Some(model_ref))?;
    Ok(data)
}

pub fn write_dataset(dir: &Path, data: &RegressionDataset, model_ref: Option<PathBuf>) -> Result<()> {
    use tuckreg_core::LinearMap;
    create_dir(dir)?;
    let manifest = DatasetManifest {
        m: data.map.m(),
        dims: data.map.dims().to_vec(),
        seed: data.map.seed(),
        distribution: data.map.distribution(),
        sigma: data.sigma,
        noise_seed: data.noise_seed,
        model_ref,
    };
    let bytes: Vec<u8> = data.y.iter().flat_map(|v| v.to_le_bytes()).collect();
    let path = dir.join(RESPONSES);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    write_json(&dir.join(MANIFEST), &manifest)
}

/// Loads a dataset; the truth is attached when `model_ref` is readable.
pub fn read_dataset(dir: &Path) -> Result<(RegressionDataset, DatasetManifest)> {
    let manifest: DatasetManifest = read_json(&dir.join(MANIFEST))?;
    let path = dir.join(RESPONSES);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if bytes.len() != 8 * manifest.m {
        return Err(Error::format(
            &path,
            format!("expected {} responses, found {} bytes", manifest.m, bytes.len()),
        ));
    }
    let y: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::format(&path, "non-finite response"));
    }
    let map = LinearMapSpec::new(manifest.m, manifest.dims.clone(), manifest.seed, manifest.distribution)?;
    let truth = match &manifest.model_ref {
        Some(r) if r.join(MANIFEST).is_file() => Some(read_model(r)?.0),
        _ => None,
    };
    let data = RegressionDataset {
        y,
        map,
        sigma: manifest.sigma,
        noise_seed: manifest.noise_seed,
        truth,
    };
    Ok((data, manifest))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateJson {
    pub gamma_hat: f64,
    pub r2: f64,
}

/// Serialised form of a [`FitReport`] (the estimate itself goes to TNSR).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub method: Method,
    pub stop_reason: StopReason,
    pub iters_run: usize,
    pub step_size: f64,
    pub wall_time_total_s: f64,
    pub wall_time_per_iter_s: f64,
    pub residuals: Vec<f64>,
    pub objective: Vec<f64>,
    /// Present when the dataset references its generating model.
    pub normalized_error: Option<f64>,
    /// Log-linear fit of the residual trace, when one exists.
    pub convergence: Option<RateJson>,
}

impl ReportJson {
    pub fn new(report: &FitReport, normalized_error: Option<f64>) -> Self {
        Self {
            method: report.method,
            stop_reason: report.stop_reason,
            iters_run: report.iters_run,
            step_size: report.step_size,
            wall_time_total_s: report.wall_time_total,
            wall_time_per_iter_s: report.wall_time_per_iter,
            residuals: report.residuals.clone(),
            objective: report.objective.clone(),
            normalized_error,
            convergence: convergence_rate(&report.residuals).ok().map(|c| RateJson {
                gamma_hat: c.gamma_hat,
                r2: c.r2,
            }),
        }
    }
}

/// Writes `report.json`, `estimate.tnsr` and, for structured fits, the
/// factors as a model bundle under `factors/`.
pub fn write_fit(dir: &Path, report: &FitReport, normalized_error: Option<f64>) -> Result<()> {
    create_dir(dir)?;
    write_json(&dir.join("report.json"), &ReportJson::new(report, normalized_error))?;
    tnsr::write(&dir.join("estimate.tnsr"), &report.estimate)?;
    if let Some(f) = &report.factors {
        write_model(&dir.join("factors"), f, None, None)?;
    }
    Ok(())
}
