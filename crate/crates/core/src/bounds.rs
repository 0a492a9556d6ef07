//! Closed-form covering-number and sample-complexity calculators for the
//! bounded structured set. Natural logarithms throughout; `K1`, `K2` are the
//! unspecified constants of the sub-Gaussian deviation bound and default to 1.

use alloc::vec::Vec;

use crate::error::{invalid, mismatch, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundInputs {
    pub dims: Vec<usize>,
    pub rank: Vec<usize>,
    pub sparsity: Vec<usize>,
    pub tau: f64,
    /// Covering radius.
    pub epsilon_cover: f64,
    /// Target restricted isometry constant.
    pub delta: f64,
    /// Allowed failure probability.
    pub failure_prob: f64,
    pub k1: f64,
    pub k2: f64,
}

impl BoundInputs {
    pub fn new(dims: Vec<usize>, rank: Vec<usize>, sparsity: Vec<usize>) -> Self {
        Self {
            dims,
            rank,
            sparsity,
            tau: 1.0,
            epsilon_cover: 0.5,
            delta: 0.5,
            failure_prob: 0.1,
            k1: 1.0,
            k2: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dims.len();
        if d == 0 {
            return Err(invalid!("order must be at least 1"));
        }
        if self.rank.len() != d || self.sparsity.len() != d {
            return Err(mismatch!("dims, rank and sparsity must have equal length"));
        }
        for k in 0..d {
            if self.dims[k] == 0 || self.rank[k] == 0 {
                return Err(invalid!("mode {k}: dims and rank must be positive"));
            }
            if self.sparsity[k] > self.dims[k] {
                return Err(invalid!("mode {k}: sparsity exceeds dimension"));
            }
        }
        positive("tau", self.tau)?;
        check_eps(self.epsilon_cover)?;
        open_unit("delta", self.delta)?;
        open_unit("failure_prob", self.failure_prob)?;
        positive("k1", self.k1)?;
        positive("k2", self.k2)
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// `max_i n_i`.
    pub fn n_bar(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(0)
    }

    fn rank_product(&self) -> f64 {
        self.rank.iter().map(|&r| r as f64).product()
    }

    fn sparse_rank_sum(&self) -> f64 {
        self.rank
            .iter()
            .zip(&self.sparsity)
            .map(|(&r, &s)| (r * s) as f64)
            .sum()
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid!("{name} must be positive and finite, got {x}"))
    }
}

fn open_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(invalid!("{name} must lie in (0, 1), got {x}"))
    }
}

/// Covering radii are accepted on `(0, 1]`.
fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(invalid!("covering radius must lie in (0, 1], got {eps}"))
    }
}

/// `ln` of the covering bound for the l1 ball of cores: `(prod r_i) ln(3 tau / eps)`.
pub fn log_cover_core(rank: &[usize], tau: f64, eps: f64) -> Result<f64> {
    positive("tau", tau)?;
    check_eps(eps)?;
    let p: f64 = rank.iter().map(|&r| r as f64).product();
    Ok(p * libm::log(3.0 * tau / eps))
}

/// `ln` of the covering bound for `s`-sparse, column-norm-bounded `n x r`
/// factors: `s r ln(3 n / eps)`.
pub fn log_cover_factor(n: usize, r: usize, s: usize, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if s > n {
        return Err(invalid!("sparsity {s} exceeds dimension {n}"));
    }
    if s == 0 || r == 0 {
        return Ok(0.0);
    }
    Ok((s * r) as f64 * libm::log(3.0 * n as f64 / eps))
}

/// `ln` of the covering bound of the whole bounded set:
/// `(prod r_i) ln(3 tau (d+1) / eps) + (sum s_i r_i) ln(3 n_bar tau (d+1) / eps)`.
pub fn log_cover_g(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let lip = inputs.tau * (inputs.order() + 1) as f64;
    let eps = inputs.epsilon_cover;
    Ok(inputs.rank_product() * libm::log(3.0 * lip / eps)
        + inputs.sparse_rank_sum() * libm::log(3.0 * inputs.n_bar() as f64 * lip / eps))
}

/// Sufficient sample count for the restricted isometry constant to be at
/// most `delta` with probability `1 - failure_prob`:
/// `delta^-2 max{K1 tau^2 (prod r_i + sum s_i r_i) ln(3 n_bar d)^2, K2 ln(1/failure_prob)}`.
pub fn sample_complexity(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let l = libm::log(3.0 * inputs.n_bar() as f64 * inputs.order() as f64);
    let structure = inputs.k1
        * inputs.tau
        * inputs.tau
        * (inputs.rank_product() + inputs.sparse_rank_sum())
        * l
        * l;
    let confidence = inputs.k2 * libm::log(1.0 / inputs.failure_prob);
    Ok(structure.max(confidence) / (inputs.delta * inputs.delta))
}

/// Order-of-magnitude sample requirements of three structural models.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DofComparison {
    /// `r^d + s r d`.
    pub structured_dof: f64,
    /// `r^d + n r d`.
    pub tucker_dof: f64,
    /// `d (s r)^d ln(n / (s r))`.
    pub vector_sparsity_dof: f64,
}

/// Compares the structured, Tucker-only and vectorised-sparse requirements
/// using `r = max r_i`, `s = max s_i`, `n = max n_i`.
pub fn dof_comparison_table(inputs: &BoundInputs) -> Result<DofComparison> {
    let d = inputs.order() as f64;
    if inputs.order() == 0 {
        return Err(invalid!("order must be at least 1"));
    }
    let r = inputs.rank.iter().copied().max().unwrap_or(0) as f64;
    let s = inputs.sparsity.iter().copied().max().unwrap_or(0) as f64;
    let n = inputs.n_bar() as f64;
    let rd = libm::pow(r, d);
    Ok(DofComparison {
        structured_dof: rd + s * r * d,
        tucker_dof: rd + n * r * d,
        vector_sparsity_dof: d * libm::pow(s * r, d) * libm::log(n / (s * r)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn published() -> BoundInputs {
        BoundInputs::new(vec![50, 50, 30], vec![3, 3, 3], vec![6, 6, 4])
    }

    #[test]
    fn core_cover_examples() {
        assert!((log_cover_core(&[1, 1, 1], 1.0, 1.0).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert_eq!(log_cover_core(&[2, 2], 0.5 / 3.0, 0.5).unwrap(), 0.0);
        assert!(log_cover_core(&[1], 1.0, 0.0).is_err());
        assert!(log_cover_core(&[1], 1.0, 1.5).is_err());
    }

    #[test]
    fn factor_cover_examples() {
        assert!((log_cover_factor(3, 1, 1, 1.0).unwrap() - 9f64.ln()).abs() < 1e-15);
        assert!((log_cover_factor(3, 1, 1, 1.0).unwrap() - 2.1972).abs() < 1e-4);
        assert_eq!(log_cover_factor(10, 4, 0, 0.5).unwrap(), 0.0);
        let one = log_cover_factor(20, 2, 3, 0.3).unwrap();
        let two = log_cover_factor(20, 4, 3, 0.3).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-12);
        assert!(log_cover_factor(3, 1, 4, 0.5).is_err());
    }

    #[test]
    fn g_cover_published_configuration() {
        let got = log_cover_g(&published()).unwrap();
        let want = 27.0 * 24f64.ln() + 48.0 * 1200f64.ln();
        assert!((got - want).abs() < 1e-12);
        assert!((got - 426.1).abs() < 0.05);
    }

    #[test]
    fn g_cover_decomposes() {
        let mut inp = published();
        inp.tau = 2.5;
        inp.epsilon_cover = 0.3;
        let d1 = (inp.order() + 1) as f64;
        let scaled = inp.epsilon_cover / (inp.tau * d1);
        let core = log_cover_core(&inp.rank, inp.tau, inp.epsilon_cover / d1).unwrap();
        let factors: f64 = (0..3)
            .map(|k| log_cover_factor(inp.n_bar(), inp.rank[k], inp.sparsity[k], scaled).unwrap())
            .sum();
        let g = log_cover_g(&inp).unwrap();
        assert!((g - (core + factors)).abs() <= 1e-12 * g);
    }

    #[test]
    fn sample_complexity_published_configuration() {
        let got = sample_complexity(&published()).unwrap();
        let want = 4.0 * 75.0 * 450f64.ln().powi(2);
        assert!((got - want).abs() <= 1e-12 * want);
        assert!((got - 11196.0).abs() < 2.0);
    }

    #[test]
    fn sample_complexity_scales_inverse_square() {
        let a = sample_complexity(&published()).unwrap();
        let mut half = published();
        half.delta = 0.25;
        let b = sample_complexity(&half).unwrap();
        assert!((b / a - 4.0).abs() < 1e-12);
    }

    #[test]
    fn confidence_branch_dominates_for_tiny_failure_prob() {
        let mut inp = BoundInputs::new(vec![2], vec![1], vec![1]);
        inp.failure_prob = 1e-300;
        let got = sample_complexity(&inp).unwrap();
        let want = 1e300f64.ln() / 0.25;
        assert!((got - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn dof_table_published_configuration() {
        let t = dof_comparison_table(&published()).unwrap();
        assert_eq!(t.structured_dof, 81.0);
        assert_eq!(t.tucker_dof, 477.0);
        assert!(t.structured_dof < t.tucker_dof);
        let mut dense = published();
        dense.sparsity = vec![50, 50, 50];
        let t = dof_comparison_table(&dense).unwrap();
        assert_eq!(t.structured_dof, t.tucker_dof);
    }

    #[test]
    fn validation() {
        let mut inp = published();
        inp.delta = 1.0;
        assert!(sample_complexity(&inp).is_err());
        let mut inp = published();
        inp.tau = 0.0;
        assert!(log_cover_g(&inp).is_err());
        let mut inp = published();
        inp.rank.pop();
        assert!(log_cover_g(&inp).is_err());
    }
}
