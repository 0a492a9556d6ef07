//! Linear measurement maps `X: R^{n_1 x .. x n_d} -> R^m`, `X(Z)_i = <X_i, Z>`.
//!
//! [`LinearMapSpec`] never stores the sensing tensors. `X_i` is regenerated
//! from ChaCha8 stream `i` of the map seed whenever it is needed, so apply
//! and adjoint hold a single `X_i` at a time and can visit rows in any order.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, mismatch, Error, Result};
use crate::model::{check_tuples, TuckerFactors};
use crate::rng;
use crate::tensor::{dot, frob_norm, l1_norm, norm2, tucker_compose, DenseTensor, Matrix};

/// Entry law of the sensing tensors. Every variant has mean zero and
/// variance `1/m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SensingDistribution {
    Gaussian,
    /// `+-1/sqrt(m)` with probability one half each.
    Rademacher,
    /// Uniform on `[-sqrt(3/m), sqrt(3/m))`.
    Uniform,
}

impl SensingDistribution {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Rademacher => "rademacher",
            Self::Uniform => "uniform",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "rademacher" => Ok(Self::Rademacher),
            "uniform" => Ok(Self::Uniform),
            other => Err(invalid!("unknown sensing distribution {other:?}")),
        }
    }
}

/// A linear map from tensors of shape `dims()` to `R^m`.
pub trait LinearMap {
    fn dims(&self) -> &[usize];

    fn m(&self) -> usize;

    /// `(<X_1, Z>, .., <X_m, Z>)`.
    fn apply(&self, z: &DenseTensor) -> Result<Vec<f64>>;

    /// `sum_i v_i X_i`.
    fn adjoint(&self, v: &[f64]) -> Result<DenseTensor>;

    /// Residual `X(Z) - y` and gradient `X*(X(Z) - y)` of `0.5 ||y - X(Z)||^2`.
    fn residual_and_gradient(&self, z: &DenseTensor, y: &[f64]) -> Result<(Vec<f64>, DenseTensor)> {
        let mut r = self.apply(z)?;
        check_len(y.len(), self.m())?;
        for (ri, yi) in r.iter_mut().zip(y) {
            *ri -= yi;
        }
        let g = self.adjoint(&r)?;
        Ok((r, g))
    }

    fn check_input(&self, z: &DenseTensor) -> Result<()> {
        if z.dims() != self.dims() {
            return Err(mismatch!(
                "tensor dims {:?} do not match map dims {:?}",
                z.dims(),
                self.dims()
            ));
        }
        Ok(())
    }
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(mismatch!("vector of length {got}, map has m = {want}"));
    }
    Ok(())
}

/// Implicit sub-Gaussian measurement operator defined by a seed.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMapSpec {
    m: usize,
    dims: Vec<usize>,
    seed: u64,
    distribution: SensingDistribution,
}

impl LinearMapSpec {
    pub fn new(m: usize, dims: Vec<usize>, seed: u64, distribution: SensingDistribution) -> Result<Self> {
        if m == 0 {
            return Err(invalid!("sample count m must be at least 1"));
        }
        DenseTensor::zeros(&dims)?;
        Ok(Self {
            m,
            dims,
            seed,
            distribution,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn distribution(&self) -> SensingDistribution {
        self.distribution
    }

    fn numel(&self) -> usize {
        self.dims.iter().product()
    }

    fn base_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn fill_row(&self, base: &ChaCha8Rng, i: usize, buf: &mut [f64]) {
        let mut rng = base.clone();
        rng.set_stream(i as u64);
        rng.set_word_pos(0);
        let m = self.m as f64;
        match self.distribution {
            SensingDistribution::Gaussian => {
                let scale = 1.0 / libm::sqrt(m);
                for x in buf.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *x = scale * z;
                }
            }
            SensingDistribution::Rademacher => {
                let scale = 1.0 / libm::sqrt(m);
                for x in buf.iter_mut() {
                    *x = if rng.random::<bool>() { scale } else { -scale };
                }
            }
            SensingDistribution::Uniform => {
                let half = libm::sqrt(3.0 / m);
                for x in buf.iter_mut() {
                    *x = half * (2.0 * rng.random::<f64>() - 1.0);
                }
            }
        }
    }

    /// The `i`-th sensing tensor (0-based).
    pub fn sensing_tensor(&self, i: usize) -> Result<DenseTensor> {
        if i >= self.m {
            return Err(Error::OutOfRange { index: i, len: self.m });
        }
        let mut buf = vec![0.0; self.numel()];
        self.fill_row(&self.base_rng(), i, &mut buf);
        Ok(DenseTensor::from_parts(self.dims.clone(), buf))
    }

    /// Stores every sensing tensor. Numerically identical to the implicit map.
    pub fn materialize(&self) -> DenseMap {
        let n = self.numel();
        let mut rows = vec![0.0; self.m * n];
        let base = self.base_rng();
        for (i, row) in rows.chunks_exact_mut(n).enumerate() {
            self.fill_row(&base, i, row);
        }
        DenseMap {
            dims: self.dims.clone(),
            m: self.m,
            rows,
        }
    }
}

impl LinearMap for LinearMapSpec {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn m(&self) -> usize {
        self.m
    }

    fn apply(&self, z: &DenseTensor) -> Result<Vec<f64>> {
        self.check_input(z)?;
        let base = self.base_rng();
        let mut buf = vec![0.0; self.numel()];
        Ok((0..self.m)
            .map(|i| {
                self.fill_row(&base, i, &mut buf);
                dot(&buf, z.data())
            })
            .collect())
    }

    fn adjoint(&self, v: &[f64]) -> Result<DenseTensor> {
        check_len(v.len(), self.m)?;
        let base = self.base_rng();
        let mut buf = vec![0.0; self.numel()];
        let mut acc = vec![0.0; self.numel()];
        for (i, &vi) in v.iter().enumerate() {
            self.fill_row(&base, i, &mut buf);
            for (a, x) in acc.iter_mut().zip(&buf) {
                *a += vi * x;
            }
        }
        Ok(DenseTensor::from_parts(self.dims.clone(), acc))
    }

    /// Single pass: each `X_i` is generated once per gradient evaluation.
    fn residual_and_gradient(&self, z: &DenseTensor, y: &[f64]) -> Result<(Vec<f64>, DenseTensor)> {
        self.check_input(z)?;
        check_len(y.len(), self.m)?;
        let base = self.base_rng();
        let mut buf = vec![0.0; self.numel()];
        let mut acc = vec![0.0; self.numel()];
        let mut r = Vec::with_capacity(self.m);
        for (i, &yi) in y.iter().enumerate() {
            self.fill_row(&base, i, &mut buf);
            let ri = dot(&buf, z.data()) - yi;
            for (a, x) in acc.iter_mut().zip(&buf) {
                *a += ri * x;
            }
            r.push(ri);
        }
        Ok((r, DenseTensor::from_parts(self.dims.clone(), acc)))
    }
}

/// A measurement map with explicitly stored sensing tensors (row `i` is
/// `vec(X_i)` in C-order).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMap {
    dims: Vec<usize>,
    m: usize,
    rows: Vec<f64>,
}

impl DenseMap {
    pub fn new(dims: Vec<usize>, m: usize, rows: Vec<f64>) -> Result<Self> {
        let n = DenseTensor::zeros(&dims)?.len();
        if m == 0 || rows.len() != m * n {
            return Err(mismatch!("{} entries for {m} rows of size {n}", rows.len()));
        }
        if rows.iter().any(|x| !x.is_finite()) {
            return Err(invalid!("non-finite sensing entry"));
        }
        Ok(Self { dims, m, rows })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.rows.len() / self.m;
        &self.rows[i * n..(i + 1) * n]
    }
}

impl LinearMap for DenseMap {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn m(&self) -> usize {
        self.m
    }

    fn apply(&self, z: &DenseTensor) -> Result<Vec<f64>> {
        self.check_input(z)?;
        Ok((0..self.m).map(|i| dot(self.row(i), z.data())).collect())
    }

    fn adjoint(&self, v: &[f64]) -> Result<DenseTensor> {
        check_len(v.len(), self.m)?;
        let mut acc = vec![0.0; self.rows.len() / self.m];
        for (i, &vi) in v.iter().enumerate() {
            for (a, x) in acc.iter_mut().zip(self.row(i)) {
                *a += vi * x;
            }
        }
        Ok(DenseTensor::from_parts(self.dims.clone(), acc))
    }

    fn residual_and_gradient(&self, z: &DenseTensor, y: &[f64]) -> Result<(Vec<f64>, DenseTensor)> {
        self.check_input(z)?;
        check_len(y.len(), self.m)?;
        let mut acc = vec![0.0; self.rows.len() / self.m];
        let mut r = Vec::with_capacity(self.m);
        for (i, &yi) in y.iter().enumerate() {
            let row = self.row(i);
            let ri = dot(row, z.data()) - yi;
            for (a, x) in acc.iter_mut().zip(row) {
                *a += ri * x;
            }
            r.push(ri);
        }
        Ok((r, DenseTensor::from_parts(self.dims.clone(), acc)))
    }
}

/// The exact isometry `Z -> vec(Z)`, with `m = prod n_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityMap {
    dims: Vec<usize>,
    m: usize,
}

impl IdentityMap {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        let m = DenseTensor::zeros(&dims)?.len();
        Ok(Self { dims, m })
    }
}

impl LinearMap for IdentityMap {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn m(&self) -> usize {
        self.m
    }

    fn apply(&self, z: &DenseTensor) -> Result<Vec<f64>> {
        self.check_input(z)?;
        Ok(z.data().to_vec())
    }

    fn adjoint(&self, v: &[f64]) -> Result<DenseTensor> {
        check_len(v.len(), self.m)?;
        Ok(DenseTensor::from_parts(self.dims.clone(), v.to_vec()))
    }
}

/// Responses `y = X(B) + eta` together with everything needed to regenerate them.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    pub y: Vec<f64>,
    pub map: LinearMapSpec,
    pub sigma: f64,
    pub noise_seed: u64,
    pub truth: Option<TuckerFactors>,
}

const NOISE_LABEL: u64 = 0x006E_6F69_7365; // "noise"

/// `eta_i ~ N(0, sigma^2)` i.i.d., drawn from the noise seed's stream.
pub fn gaussian_noise(m: usize, sigma: f64, noise_seed: u64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(invalid!("noise level must be finite and >= 0, got {sigma}"));
    }
    let mut rng = rng::stream(noise_seed, &[NOISE_LABEL]);
    Ok((0..m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect())
}

/// Generates the responses of `model` under `map` with Gaussian noise.
pub fn synthesize(model: &TuckerFactors, map: &LinearMapSpec, sigma: f64, noise_seed: u64) -> Result<RegressionDataset> {
    if model.dims() != map.dims() {
        return Err(mismatch!(
            "model dims {:?} do not match map dims {:?}",
            model.dims(),
            map.dims()
        ));
    }
    let noise = gaussian_noise(map.m(), sigma, noise_seed)?;
    let mut y = map.apply(&model.compose())?;
    if sigma > 0.0 {
        for (yi, e) in y.iter_mut().zip(&noise) {
            *yi += e;
        }
    }
    Ok(RegressionDataset {
        y,
        map: map.clone(),
        sigma,
        noise_seed,
        truth: Some(model.clone()),
    })
}

/// Monte-Carlo estimate of the restricted isometry constant.
#[derive(Debug, Clone, PartialEq)]
pub struct RipEstimate {
    /// `max_t |ratio_t - 1|`, a lower estimate of the true constant.
    pub delta_hat: f64,
    /// `||X(Z_t)||^2 / ||Z_t||_F^2` for each sampled `Z_t`.
    pub samples: Vec<f64>,
}

/// Draws one member of the bounded structured set: unit-norm `s`-sparse
/// factor columns with Gaussian values and a Gaussian core rescaled to l1
/// norm `tau`. Sample `t` uses stream `(seed, [5, t])`.
pub fn sample_bounded_member(
    dims: &[usize],
    rank: &[usize],
    sparsity: &[usize],
    tau: f64,
    seed: u64,
    t: u64,
) -> Result<DenseTensor> {
    check_tuples(dims, rank, sparsity)?;
    let mut rng = rng::stream(seed, &[5, t]);
    let core_len: usize = rank.iter().product();
    let mut core: Vec<f64> = (0..core_len).map(|_| StandardNormal.sample(&mut rng)).collect();
    let l1: f64 = core.iter().map(|x: &f64| x.abs()).sum();
    core.iter_mut().for_each(|x| *x *= tau / l1);
    let core = DenseTensor::new(rank.to_vec(), core)?;
    let mut factors = Vec::with_capacity(dims.len());
    for k in 0..dims.len() {
        let mut cols = Vec::with_capacity(rank[k]);
        for _ in 0..rank[k] {
            let mut col = vec![0.0; dims[k]];
            for i in rand::seq::index::sample(&mut rng, dims[k], sparsity[k]).iter() {
                col[i] = StandardNormal.sample(&mut rng);
            }
            let nrm = norm2(&col);
            col.iter_mut().for_each(|x| *x /= nrm);
            cols.push(col);
        }
        factors.push(Matrix::from_columns(dims[k], &cols)?);
    }
    let z = tucker_compose(&core, &factors)?;
    debug_assert!(l1_norm(&core) <= tau * (1.0 + 1e-9));
    Ok(z)
}

pub fn rip_probe<M: LinearMap + ?Sized>(
    map: &M,
    rank: &[usize],
    sparsity: &[usize],
    tau: f64,
    trials: usize,
    seed: u64,
) -> Result<RipEstimate> {
    if trials == 0 {
        return Err(invalid!("rip probe needs at least one trial"));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid!("tau must be positive, got {tau}"));
    }
    let mut samples = Vec::with_capacity(trials);
    for t in 0..trials {
        let z = sample_bounded_member(map.dims(), rank, sparsity, tau, seed, t as u64)?;
        let fz = frob_norm(&z);
        let xz = map.apply(&z)?;
        let ratio = dot(&xz, &xz) / (fz * fz);
        samples.push(ratio);
    }
    let delta_hat = samples.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    Ok(RipEstimate { delta_hat, samples })
}
