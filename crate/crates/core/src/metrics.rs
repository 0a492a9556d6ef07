//! Estimation-error and classification metrics, and percentile summaries.

use alloc::vec::Vec;

use crate::error::{invalid, mismatch, Error, Result};
use crate::tensor::{frob_norm, DenseTensor};

/// `||truth - est||_F / ||truth||_F`.
pub fn normalized_error(truth: &DenseTensor, est: &DenseTensor) -> Result<f64> {
    let denom = frob_norm(truth);
    if denom == 0.0 {
        return Err(invalid!("normalized error is undefined for a zero reference tensor"));
    }
    Ok(frob_norm(&truth.sub(est)?) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassifyMetrics {
    /// Fraction of label-0 cases predicted 0.
    pub specificity: f64,
    /// Fraction of label-1 cases predicted 1.
    pub sensitivity: f64,
    pub harmonic_mean: f64,
}

/// `2pq / (p + q)`, or 0 when both are 0.
pub fn harmonic_mean(p: f64, q: f64) -> f64 {
    if p + q == 0.0 {
        0.0
    } else {
        2.0 * p * q / (p + q)
    }
}

/// Scores responses thresholded at `threshold` (a response strictly above
/// it is labelled 1) against binary labels.
pub fn classify_metrics(predictions: &[f64], labels: &[u8], threshold: f64) -> Result<ClassifyMetrics> {
    if predictions.len() != labels.len() {
        return Err(mismatch!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        ));
    }
    let (mut neg, mut pos, mut tn, mut tp) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &l) in predictions.iter().zip(labels) {
        let predicted = p > threshold;
        match l {
            0 => {
                neg += 1;
                tn += usize::from(!predicted);
            }
            1 => {
                pos += 1;
                tp += usize::from(predicted);
            }
            other => return Err(invalid!("label {other} is not binary")),
        }
    }
    if neg == 0 {
        return Err(Error::EmptyClass(0));
    }
    if pos == 0 {
        return Err(Error::EmptyClass(1));
    }
    let specificity = tn as f64 / neg as f64;
    let sensitivity = tp as f64 / pos as f64;
    Ok(ClassifyMetrics {
        specificity,
        sensitivity,
        harmonic_mean: harmonic_mean(specificity, sensitivity),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Percentiles {
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
}

/// Percentile `q` in `[0, 1]` with linear interpolation between order
/// statistics at position `q (n - 1)`. `+inf` sorts above every finite value.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid!("percentile of an empty sample"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(invalid!("percentile input contains NaN"));
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(interpolate(&sorted, q))
}

fn interpolate(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = libm::ceil(pos) as usize;
    let frac = pos - lo as f64;
    if lo == hi || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn summarize_values(values: &[f64]) -> Result<Percentiles> {
    if values.is_empty() {
        return Err(invalid!("cannot summarize an empty cell"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(invalid!("summary input contains NaN"));
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Percentiles {
        p25: interpolate(&sorted, 0.25),
        median: interpolate(&sorted, 0.5),
        p75: interpolate(&sorted, 0.75),
    })
}
