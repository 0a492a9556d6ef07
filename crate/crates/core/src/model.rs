//! Rank-and-sparsity structured tensors: a Tucker core together with factor
//! matrices whose columns have bounded support.

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, mismatch, Result};
use crate::rng;
use crate::tensor::{l1_norm, mode_product, norm2, tucker_compose, DenseTensor, Matrix};

/// Validates a `(dims, rank, sparsity)` triple: equal lengths, positive
/// entries, `rank <= dims` and `sparsity <= dims` componentwise.
pub fn check_tuples(dims: &[usize], rank: &[usize], sparsity: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(invalid!("tensor order must be at least 1"));
    }
    if rank.len() != dims.len() || sparsity.len() != dims.len() {
        return Err(mismatch!(
            "dims {:?}, rank {:?} and sparsity {:?} must have equal length",
            dims,
            rank,
            sparsity
        ));
    }
    for k in 0..dims.len() {
        if dims[k] == 0 || rank[k] == 0 || sparsity[k] == 0 {
            return Err(invalid!("mode {k}: dims, rank and sparsity must be positive"));
        }
        if rank[k] > dims[k] {
            return Err(invalid!("mode {k}: rank {} exceeds dimension {}", rank[k], dims[k]));
        }
        if sparsity[k] > dims[k] {
            return Err(invalid!(
                "mode {k}: sparsity {} exceeds dimension {}",
                sparsity[k],
                dims[k]
            ));
        }
    }
    Ok(())
}

/// A tensor `core x_1 U_1 ... x_d U_d` whose factor columns each hold at most
/// `sparsity[k]` nonzeros.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerFactors {
    core: DenseTensor,
    factors: Vec<Matrix>,
    rank: Vec<usize>,
    sparsity: Vec<usize>,
    dims: Vec<usize>,
}

impl TuckerFactors {
    /// Checks shapes and the per-column sparsity certificate.
    pub fn new(core: DenseTensor, factors: Vec<Matrix>, sparsity: Vec<usize>) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(mismatch!(
                "{} factors for a core of order {}",
                factors.len(),
                core.order()
            ));
        }
        let rank = core.dims().to_vec();
        let dims: Vec<usize> = factors.iter().map(Matrix::rows).collect();
        for (k, u) in factors.iter().enumerate() {
            if u.cols() != rank[k] {
                return Err(mismatch!(
                    "factor {k} has {} columns, core mode has size {}",
                    u.cols(),
                    rank[k]
                ));
            }
        }
        check_tuples(&dims, &rank, &sparsity)?;
        for (k, u) in factors.iter().enumerate() {
            for j in 0..u.cols() {
                let nnz = (0..u.rows()).filter(|&i| u.get(i, j) != 0.0).count();
                if nnz > sparsity[k] {
                    return Err(invalid!(
                        "factor {k} column {j} has {nnz} nonzeros, limit {}",
                        sparsity[k]
                    ));
                }
            }
        }
        Ok(Self {
            core,
            factors,
            rank,
            sparsity,
            dims,
        })
    }

    /// The zero tensor with the given structure tuples (zero core, zero factors).
    pub fn zero(dims: &[usize], rank: &[usize], sparsity: &[usize]) -> Result<Self> {
        check_tuples(dims, rank, sparsity)?;
        let core = DenseTensor::zeros(rank)?;
        let factors = dims
            .iter()
            .zip(rank)
            .map(|(&n, &r)| Matrix::zeros(n, r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(core, factors, sparsity.to_vec())
    }

    pub fn core(&self) -> &DenseTensor {
        &self.core
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn rank(&self) -> &[usize] {
        &self.rank
    }

    pub fn sparsity(&self) -> &[usize] {
        &self.sparsity
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn into_parts(self) -> (DenseTensor, Vec<Matrix>, Vec<usize>) {
        (self.core, self.factors, self.sparsity)
    }

    /// The dense tensor this decomposition represents.
    pub fn compose(&self) -> DenseTensor {
        tucker_compose(&self.core, &self.factors).expect("shapes validated at construction")
    }

    /// Rescales every factor column to unit norm and pushes the scales into
    /// the core. The represented tensor is unchanged; `tau` is the resulting
    /// core l1 norm.
    pub fn normalize(&self) -> NormalizedTuckerFactors {
        let mut core = self.core.clone();
        let mut factors = Vec::with_capacity(self.order());
        for (k, u) in self.factors.iter().enumerate() {
            let norms: Vec<f64> = (0..u.cols()).map(|j| norm2(&u.column(j))).collect();
            let unit = Matrix::from_fn(u.rows(), u.cols(), |i, j| {
                if norms[j] > 0.0 {
                    u.get(i, j) / norms[j]
                } else {
                    0.0
                }
            })
            .expect("finite");
            let diag = Matrix::from_fn(u.cols(), u.cols(), |i, j| if i == j { norms[i] } else { 0.0 })
                .expect("finite");
            core = mode_product(&core, &diag, k).expect("square diagonal");
            factors.push(unit);
        }
        let tau = l1_norm(&core);
        let factors = Self::new(core, factors, self.sparsity.clone()).expect("supports unchanged");
        NormalizedTuckerFactors { factors, tau }
    }
}

/// A member of the bounded structured set: core l1 norm at most `tau` and
/// every factor column of Euclidean norm at most one, so the represented
/// tensor has Frobenius norm at most `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTuckerFactors {
    factors: TuckerFactors,
    tau: f64,
}

impl NormalizedTuckerFactors {
    pub fn new(factors: TuckerFactors, tau: f64) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(invalid!("tau must be a finite nonnegative number, got {tau}"));
        }
        let slack = 1e-12;
        let l1 = l1_norm(factors.core());
        if l1 > tau * (1.0 + slack) {
            return Err(invalid!("core l1 norm {l1} exceeds tau {tau}"));
        }
        for (k, u) in factors.factors().iter().enumerate() {
            for j in 0..u.cols() {
                let c = norm2(&u.column(j));
                if c > 1.0 + slack {
                    return Err(invalid!("factor {k} column {j} has norm {c} > 1"));
                }
            }
        }
        Ok(Self { factors, tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn factors(&self) -> &TuckerFactors {
        &self.factors
    }

    pub fn into_factors(self) -> TuckerFactors {
        self.factors
    }

    pub fn compose(&self) -> DenseTensor {
        self.factors.compose()
    }
}

/// Draws a structured model with the synthetic protocol: every factor column
/// has exactly `sparsity[k]` nonzeros on a uniformly random support, each
/// value `(-1)^u (a + |z|)` with `u ~ Bernoulli(1/2)` and `z ~ N(0,1)`; core
/// entries are uniform on `[0, 1)`.
///
/// The core uses the stream `(seed, [0])` and factor column `j` of mode `k`
/// the stream `(seed, [1, k, j])`.
pub fn gen_model(
    dims: &[usize],
    rank: &[usize],
    sparsity: &[usize],
    a: f64,
    seed: u64,
) -> Result<TuckerFactors> {
    check_tuples(dims, rank, sparsity)?;
    if !(a >= 0.0) || !a.is_finite() {
        return Err(invalid!("magnitude floor a must be finite and >= 0, got {a}"));
    }
    let mut core_rng = rng::stream(seed, &[0]);
    let core_len: usize = rank.iter().product();
    let core_data: Vec<f64> = (0..core_len).map(|_| core_rng.random::<f64>()).collect();
    let core = DenseTensor::new(rank.to_vec(), core_data)?;

    let mut factors = Vec::with_capacity(dims.len());
    for k in 0..dims.len() {
        let (n, r, s) = (dims[k], rank[k], sparsity[k]);
        let mut u = Matrix::zeros(n, r)?;
        for j in 0..r {
            let mut col_rng = rng::stream(seed, &[1, k as u64, j as u64]);
            let support = index::sample(&mut col_rng, n, s);
            for i in support.iter() {
                let negative: bool = col_rng.random_bool(0.5);
                let z: f64 = StandardNormal.sample(&mut col_rng);
                let mag = a + z.abs();
                u.set(i, j, if negative { -mag } else { mag });
            }
        }
        factors.push(u);
    }
    TuckerFactors::new(core, factors, sparsity.to_vec())
}

/// Draws a well-separated structured model: within each mode the factor
/// columns have disjoint supports and unit norm (so they are orthonormal),
/// and the core is superdiagonal with entries `10^{-t}`, giving every
/// matricization singular-value gaps of 10x. Requires equal ranks and
/// `rank[k] * sparsity[k] <= dims[k]`.
pub fn gen_separated_model(
    dims: &[usize],
    rank: &[usize],
    sparsity: &[usize],
    seed: u64,
) -> Result<TuckerFactors> {
    check_tuples(dims, rank, sparsity)?;
    let r = rank[0];
    if rank.iter().any(|&x| x != r) {
        return Err(invalid!("separated models need equal ranks, got {:?}", rank));
    }
    for k in 0..dims.len() {
        if rank[k] * sparsity[k] > dims[k] {
            return Err(invalid!(
                "mode {k}: {} disjoint supports of size {} do not fit in {}",
                rank[k],
                sparsity[k],
                dims[k]
            ));
        }
    }
    let core = DenseTensor::from_fn(rank, |ix| {
        if ix.iter().all(|&i| i == ix[0]) {
            libm::pow(10.0, -(ix[0] as f64))
        } else {
            0.0
        }
    })?;
    let mut factors = Vec::with_capacity(dims.len());
    for k in 0..dims.len() {
        let (n, s) = (dims[k], sparsity[k]);
        let mut rng_k = rng::stream(seed, &[2, k as u64]);
        let perm = index::sample(&mut rng_k, n, r * s).into_vec();
        let mut u = Matrix::zeros(n, r)?;
        for j in 0..r {
            let mut vals: Vec<f64> = (0..s)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng_k);
                    z.signum() * (0.5 + z.abs())
                })
                .collect();
            let nrm = norm2(&vals);
            vals.iter_mut().for_each(|v| *v /= nrm);
            for (t, &i) in perm[j * s..(j + 1) * s].iter().enumerate() {
                u.set(i, j, vals[t]);
            }
        }
        factors.push(u);
    }
    TuckerFactors::new(core, factors, sparsity.to_vec())
}

/// Free-parameter count `prod r_i + sum_i r_i s_i ln n_i`.
pub fn degrees_of_freedom(rank: &[usize], sparsity: &[usize], dims: &[usize]) -> Result<f64> {
    check_tuples(dims, rank, sparsity)?;
    let core: f64 = rank.iter().map(|&r| r as f64).product();
    let factors: f64 = (0..dims.len())
        .map(|k| (rank[k] * sparsity[k]) as f64 * libm::log(dims[k] as f64))
        .sum();
    Ok(core + factors)
}

/// Builds a decomposition of `ga * A + gb * B` with rank `2r` and the same
/// sparsity: block-diagonal core `[ga S_a, 0; 0, gb S_b]` and concatenated
/// factors `[U_a U_b]`.
pub fn direct_sum(za: &TuckerFactors, zb: &TuckerFactors, ga: f64, gb: f64) -> Result<TuckerFactors> {
    if za.dims != zb.dims || za.rank != zb.rank || za.sparsity != zb.sparsity {
        return Err(mismatch!(
            "direct sum needs equal (dims, rank, sparsity), got ({:?}, {:?}, {:?}) and ({:?}, {:?}, {:?})",
            za.dims,
            za.rank,
            za.sparsity,
            zb.dims,
            zb.rank,
            zb.sparsity
        ));
    }
    if !ga.is_finite() || !gb.is_finite() {
        return Err(invalid!("weights must be finite"));
    }
    let rank = &za.rank;
    let doubled: Vec<usize> = rank.iter().map(|r| 2 * r).collect();
    let core = DenseTensor::from_fn(&doubled, |ix| {
        if ix.iter().zip(rank).all(|(&i, &r)| i < r) {
            let sub: Vec<usize> = ix.to_vec();
            ga * za.core.get(&sub).expect("in range")
        } else if ix.iter().zip(rank).all(|(&i, &r)| i >= r) {
            let sub: Vec<usize> = ix.iter().zip(rank).map(|(&i, &r)| i - r).collect();
            gb * zb.core.get(&sub).expect("in range")
        } else {
            0.0
        }
    })?;
    let factors = za
        .factors
        .iter()
        .zip(&zb.factors)
        .map(|(ua, ub)| {
            let r = ua.cols();
            Matrix::from_fn(ua.rows(), 2 * r, |i, j| {
                if j < r {
                    ua.get(i, j)
                } else {
                    ub.get(i, j - r)
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TuckerFactors::new(core, factors, za.sparsity.clone())
}

/// Number of nonzeros in each column of every factor, for structure checks.
pub fn column_supports(f: &TuckerFactors) -> Vec<Vec<usize>> {
    f.factors
        .iter()
        .map(|u| {
            (0..u.cols())
                .map(|j| (0..u.rows()).filter(|&i| u.get(i, j) != 0.0).count())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::tensor::frob_norm;

    #[test]
    fn zero_core_composes_to_zero() {
        let z = TuckerFactors::zero(&[3, 4], &[2, 2], &[1, 2]).unwrap();
        assert!(z.compose().is_zero());
        assert_eq!(z.compose().dims(), &[3, 4]);
    }

    #[test]
    fn order_one_is_matrix_vector() {
        let core = DenseTensor::new(vec![2], vec![2.0, -1.0]).unwrap();
        let u = Matrix::new(3, 2, vec![1.0, 0.0, 0.0, 3.0, 0.5, 0.0]).unwrap();
        let t = TuckerFactors::new(core, vec![u], vec![2]).unwrap();
        assert_eq!(t.compose().data(), &[2.0, -3.0, 1.0]);
    }

    #[test]
    fn published_configuration_generates() {
        let m = gen_model(&[50, 50, 30], &[3, 3, 3], &[6, 6, 4], 0.5, 11).unwrap();
        for (k, counts) in column_supports(&m).iter().enumerate() {
            assert!(counts.iter().all(|&c| c == m.sparsity()[k]));
        }
        for u in m.factors() {
            assert!(u.data().iter().all(|&x| x == 0.0 || x.abs() >= 0.5));
        }
        assert!(m.core().data().iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn dense_columns_allowed() {
        let m = gen_model(&[4, 3], &[2, 3], &[4, 3], 0.0, 5).unwrap();
        assert_eq!(column_supports(&m), vec![vec![4, 4], vec![3, 3, 3]]);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_model(&[4, 4, 4], &[2, 2, 2], &[2, 2, 2], 0.5, 42).unwrap();
        let b = gen_model(&[4, 4, 4], &[2, 2, 2], &[2, 2, 2], 0.5, 42).unwrap();
        assert_eq!(a, b);
        let c = gen_model(&[4, 4, 4], &[2, 2, 2], &[2, 2, 2], 0.5, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generator_rejects_bad_tuples() {
        assert!(gen_model(&[4, 4], &[5, 1], &[1, 1], 0.5, 0).is_err());
        assert!(gen_model(&[4, 4], &[1, 1], &[1, 5], 0.5, 0).is_err());
        assert!(gen_model(&[4, 4], &[1], &[1, 1], 0.5, 0).is_err());
        assert!(gen_model(&[4, 4], &[1, 1], &[1, 1], -0.1, 0).is_err());
    }

    #[test]
    fn dof_published_configuration() {
        // 27 + 18 ln 50 + 18 ln 50 + 12 ln 30
        let want = 27.0 + 36.0 * 50f64.ln() + 12.0 * 30f64.ln();
        let got = degrees_of_freedom(&[3, 3, 3], &[6, 6, 4], &[50, 50, 30]).unwrap();
        assert!((got - want).abs() < 1e-12);
        // The quoted 208.66 is rounded from 208.647.
        assert!((got - 208.66).abs() < 0.02);
        // ln 1 = 0 leaves only the core count.
        assert_eq!(degrees_of_freedom(&[1, 1, 1], &[1, 1, 1], &[1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn dof_monotone() {
        let base = degrees_of_freedom(&[2, 2], &[2, 2], &[5, 5]).unwrap();
        assert!(degrees_of_freedom(&[3, 2], &[2, 2], &[5, 5]).unwrap() >= base);
        assert!(degrees_of_freedom(&[2, 2], &[3, 2], &[5, 5]).unwrap() >= base);
        assert!(degrees_of_freedom(&[2, 2], &[2, 2], &[6, 5]).unwrap() >= base);
    }

    #[test]
    fn direct_sum_trivial_weights() {
        let a = gen_model(&[5, 4, 3], &[2, 2, 1], &[2, 3, 2], 0.5, 1).unwrap();
        let ca = a.compose();
        let only_a = direct_sum(&a, &a, 1.0, 0.0).unwrap();
        let diff = only_a.compose().sub(&ca).unwrap();
        assert!(frob_norm(&diff) <= 1e-12 * frob_norm(&ca));
        let doubled = direct_sum(&a, &a, 1.0, 1.0).unwrap();
        let diff = doubled.compose().sub(&ca.scaled(2.0)).unwrap();
        assert!(frob_norm(&diff) <= 1e-12 * frob_norm(&ca));
        assert_eq!(doubled.rank(), &[4, 4, 2]);
        assert_eq!(doubled.sparsity(), a.sparsity());
    }

    #[test]
    fn direct_sum_l1_of_core() {
        let a = gen_model(&[5, 4, 3], &[2, 2, 1], &[2, 3, 2], 0.5, 1).unwrap();
        let b = gen_model(&[5, 4, 3], &[2, 2, 1], &[2, 3, 2], 0.5, 2).unwrap();
        let c = direct_sum(&a, &b, 0.7, -1.3).unwrap();
        let want = 0.7 * l1_norm(a.core()) + 1.3 * l1_norm(b.core());
        assert!((l1_norm(c.core()) - want).abs() < 1e-12);
    }

    #[test]
    fn direct_sum_rejects_mismatch() {
        let a = gen_model(&[5, 4], &[2, 2], &[2, 3], 0.5, 1).unwrap();
        let b = gen_model(&[5, 4], &[2, 1], &[2, 3], 0.5, 1).unwrap();
        assert!(direct_sum(&a, &b, 1.0, 1.0).is_err());
    }

    #[test]
    fn normalize_preserves_tensor() {
        let a = gen_model(&[6, 5, 4], &[2, 3, 2], &[3, 2, 2], 0.5, 9).unwrap();
        let n = a.normalize();
        let diff = n.compose().sub(&a.compose()).unwrap();
        assert!(frob_norm(&diff) <= 1e-12 * frob_norm(&a.compose()));
        assert!(frob_norm(&n.compose()) <= n.tau() * (1.0 + 1e-12));
        for u in n.factors().factors() {
            for j in 0..u.cols() {
                assert!((norm2(&u.column(j)) - 1.0).abs() < 1e-12);
            }
        }
        assert!(NormalizedTuckerFactors::new(a.clone(), 1e-3).is_err());
    }

    #[test]
    fn sparsity_certificate_enforced() {
        let core = DenseTensor::new(vec![1], vec![1.0]).unwrap();
        let u = Matrix::new(3, 1, vec![1.0, 1.0, 0.0]).unwrap();
        assert!(TuckerFactors::new(core.clone(), vec![u.clone()], vec![1]).is_err());
        assert!(TuckerFactors::new(core, vec![u], vec![2]).is_ok());
    }

    #[test]
    fn separated_model_is_orthonormal() {
        let m = gen_separated_model(&[10, 9, 8], &[2, 2, 2], &[3, 3, 3], 4).unwrap();
        for u in m.factors() {
            let g = u.transpose().gram();
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g.get(i, j) - want).abs() < 1e-12);
                }
            }
        }
        assert!(gen_separated_model(&[5, 5], &[2, 2], &[3, 3], 0).is_err());
    }
}
