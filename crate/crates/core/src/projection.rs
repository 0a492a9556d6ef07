//! Approximate projection onto rank-`r`, sparsity-`s` Tucker tensors.
//!
//! Per mode, the leading sparse principal components of the matricization
//! are extracted from its Gram matrix `T_(k) T_(k)^T` (size `n_k x n_k`) by
//! truncated power iteration with Hotelling deflation. The core is then the
//! least-squares fit of the input onto the chosen factor spans.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::linalg::{pseudo_inverse, sym_eigen};
use crate::model::{check_tuples, TuckerFactors};
use crate::tensor::{dot, frob_norm, matricize, mode_product, norm2, DenseTensor, Matrix};

/// Components whose Gram eigenvalue is below `RANK_CUT * top` are treated as
/// numerically absent. Forming the Gram squares singular values, so roundoff
/// sits near `n * eps * top`; the cut stays above it.
const RANK_CUT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SparsePcaOptions {
    /// Iteration cap per start of the truncated power method.
    pub max_iters: usize,
    /// Stop once successive iterates are this close in Euclidean distance.
    pub tol: f64,
}

impl Default for SparsePcaOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-9,
        }
    }
}

impl SparsePcaOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(invalid!("sparse PCA needs a positive iteration cap"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid!("sparse PCA tolerance must be positive"));
        }
        Ok(())
    }
}

/// Target structure of the sparse HOSVD projection.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProjectionConfig {
    pub rank: Vec<usize>,
    pub sparsity: Vec<usize>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub pca: SparsePcaOptions,
}

impl ProjectionConfig {
    pub fn new(rank: Vec<usize>, sparsity: Vec<usize>) -> Self {
        Self {
            rank,
            sparsity,
            pca: SparsePcaOptions::default(),
        }
    }
}

/// Keeps the `s` largest-magnitude entries; ties go to the lower index.
pub fn hard_threshold(v: &[f64], s: usize) -> Vec<f64> {
    if s >= v.len() {
        return v.to_vec();
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| {
        v[j].abs()
            .partial_cmp(&v[i].abs())
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut out = vec![0.0; v.len()];
    for &i in &order[..s] {
        out[i] = v[i];
    }
    out
}

fn normalize(v: &mut [f64]) -> bool {
    let n = norm2(v);
    if n > 0.0 && n.is_finite() {
        v.iter_mut().for_each(|x| *x /= n);
        true
    } else {
        false
    }
}

fn fix_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|&&x| x != 0.0) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn sym_matvec(g: &Matrix, v: &[f64]) -> Vec<f64> {
    (0..g.rows())
        .map(|i| dot(&g.data()[i * g.cols()..(i + 1) * g.cols()], v))
        .collect()
}

fn quad(g: &Matrix, v: &[f64]) -> f64 {
    dot(v, &sym_matvec(g, v))
}

/// Replaces `v` by the top eigenvector of `G` restricted to `v`'s support.
fn polish_on_support(g: &Matrix, v: &mut [f64]) {
    let support: Vec<usize> = (0..v.len()).filter(|&i| v[i] != 0.0).collect();
    if support.is_empty() {
        return;
    }
    let sub = Matrix::from_fn(support.len(), support.len(), |a, b| g.get(support[a], support[b]))
        .expect("finite Gram entries");
    let eig = sym_eigen(&sub);
    v.iter_mut().for_each(|x| *x = 0.0);
    for (a, &i) in support.iter().enumerate() {
        v[i] = eig.vectors[0][a];
    }
    // Entries that vanish in the restricted eigenvector leave the support,
    // which only tightens the sparsity certificate.
}

/// Truncated power iteration `v <- H_s(G v) / ||H_s(G v)||` from `start`,
/// followed by an exact eigen-solve on the final support.
fn truncated_power(g: &Matrix, s: usize, start: Vec<f64>, opts: &SparsePcaOptions) -> Option<Vec<f64>> {
    let mut v = hard_threshold(&start, s);
    if !normalize(&mut v) {
        return None;
    }
    for _ in 0..opts.max_iters {
        let mut next = hard_threshold(&sym_matvec(g, &v), s);
        if !normalize(&mut next) {
            break;
        }
        // Power iterates of an indefinite deflated Gram may flip sign.
        if dot(&next, &v) < 0.0 {
            next.iter_mut().for_each(|x| *x = -*x);
        }
        let step = libm::sqrt(next.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum());
        v = next;
        if step <= opts.tol {
            break;
        }
    }
    polish_on_support(g, &mut v);
    Some(v)
}

/// Leading `s`-sparse unit vector of the symmetric PSD-ish matrix `g`.
/// Starts from the hard-thresholded dense top eigenvector and from every
/// coordinate direction, keeping the best explained variance `v^T G v`
/// (earlier starts win ties).
fn leading_sparse_component(g: &Matrix, s: usize, opts: &SparsePcaOptions) -> Option<(f64, Vec<f64>)> {
    let n = g.rows();
    let eig = sym_eigen(g);
    let dense = eig.vectors[0].clone();
    if s >= n {
        let mut v = dense;
        return normalize(&mut v).then(|| (eig.values[0], v));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let starts = core::iter::once(dense).chain((0..n).map(|i| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    }));
    for start in starts {
        let Some(v) = truncated_power(g, s, start, opts) else {
            continue;
        };
        let (score, v) = swap_search(g, quad(g, &v), v);
        let better = match &best {
            None => true,
            Some((b, _)) => score > *b + 1e-13 * b.abs(),
        };
        if better {
            best = Some((score, v));
        }
    }
    best
}

/// Exchanges one support index for one outside index while that raises the
/// top eigenvalue of the restricted matrix; first improving swap wins.
fn swap_search(g: &Matrix, mut score: f64, mut v: Vec<f64>) -> (f64, Vec<f64>) {
    let n = v.len();
    let restricted_top = |support: &[usize]| -> (f64, Vec<f64>) {
        let sub = Matrix::from_fn(support.len(), support.len(), |a, b| g.get(support[a], support[b]))
            .expect("finite Gram entries");
        let eig = sym_eigen(&sub);
        let mut w = vec![0.0; n];
        for (a, &i) in support.iter().enumerate() {
            w[i] = eig.vectors[0][a];
        }
        (eig.values[0], w)
    };
    // A bounded number of passes guards against cycling on exact ties.
    for _ in 0..4 * n {
        let support: Vec<usize> = (0..n).filter(|&i| v[i] != 0.0).collect();
        let mut improved = false;
        'outer: for a in 0..support.len() {
            for out in (0..n).filter(|i| !support.contains(i)) {
                let mut trial = support.clone();
                trial[a] = out;
                trial.sort_unstable();
                let (value, w) = restricted_top(&trial);
                if value > score + 1e-12 * score.abs() {
                    score = value;
                    v = w;
                    improved = true;
                    break 'outer;
                }
            }
        }
        if !improved {
            break;
        }
    }
    (score, v)
}

/// First `k` `s`-sparse principal components of the row space Gram `g`,
/// extracted sequentially with Hotelling deflation `G <- G - lambda v v^T`.
/// Columns past the numerical rank are returned as zeros.
pub fn sparse_components_from_gram(g: &Matrix, s: usize, k: usize, opts: &SparsePcaOptions) -> Result<Matrix> {
    let n = g.rows();
    opts.validate()?;
    if s == 0 || s > n {
        return Err(invalid!("sparsity {s} must lie in 1..={n}"));
    }
    if k == 0 || k > n {
        return Err(invalid!("component count {k} must lie in 1..={n}"));
    }
    let top = sym_eigen(g).values[0].max(0.0);
    let cut = RANK_CUT * top;
    let mut work = g.clone();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let found = if top > 0.0 {
            leading_sparse_component(&work, s, opts)
        } else {
            None
        };
        match found {
            Some((lambda, mut v)) if lambda > cut => {
                fix_sign(&mut v);
                let lambda = quad(&work, &v);
                for i in 0..n {
                    for j in 0..n {
                        let x = work.get(i, j) - lambda * v[i] * v[j];
                        work.set(i, j, x);
                    }
                }
                columns.push(v);
            }
            _ => columns.push(vec![0.0; n]),
        }
    }
    Matrix::from_columns(n, &columns)
}

/// Subsets examined before [`sparse_basis_from_gram`] falls back to greedy
/// selection.
const MAX_SUBSETS: usize = 50_000;

/// `k` `s`-sparse unit vectors whose span captures as much of `g` as
/// possible. Candidates are the Hotelling components plus the sparse vectors
/// closest to the leading eigenspace (truncated power iteration on its
/// projector, from every eigenvector and coordinate start). Among distinct
/// candidates the best-spanning subset is chosen exhaustively when that is
/// cheap, greedily otherwise.
///
/// Unlike plain deflation this recovers non-orthogonal sparse bases, e.g.
/// factor columns with overlapping supports, whose leading sparse component
/// need not lie in the column space at all.
pub fn sparse_basis_from_gram(g: &Matrix, s: usize, k: usize, opts: &SparsePcaOptions) -> Result<Matrix> {
    let n = g.rows();
    let hotelling = sparse_components_from_gram(g, s, k, opts)?;
    let eig = sym_eigen(g);
    let top = eig.values[0].max(0.0);
    let live = eig.values.iter().take(k).filter(|&&l| top > 0.0 && l > RANK_CUT * top).count();
    if live == 0 {
        return Ok(hotelling);
    }
    let proj = Matrix::from_fn(n, n, |i, j| (0..live).map(|c| eig.vectors[c][i] * eig.vectors[c][j]).sum())?;

    let mut pool: Vec<Vec<f64>> = (0..k).map(|j| hotelling.column(j)).collect();
    let starts = eig.vectors[..live]
        .iter()
        .cloned()
        .chain(zero_forced_starts(&eig.vectors[..live], n))
        .chain((0..n).map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        }));
    for start in starts {
        if let Some(v) = truncated_power(&proj, s, start, opts) {
            pool.push(v);
        }
    }
    let mut cands: Vec<Vec<f64>> = Vec::new();
    for mut v in pool {
        if !normalize(&mut v) {
            continue;
        }
        fix_sign(&mut v);
        if cands.iter().all(|c| libm::fabs(dot(c, &v)) < 1.0 - 1e-10) {
            cands.push(v);
        }
    }

    let c = cands.len();
    let want = live.min(c);
    let cross = Matrix::from_fn(c, c, |a, b| dot(&cands[a], &cands[b]))?;
    let gv: Vec<Vec<f64>> = cands.iter().map(|v| sym_matvec(g, v)).collect();
    let energy = Matrix::from_fn(c, c, |a, b| dot(&cands[a], &gv[b]))?;
    let chosen = if binomial(c, want) <= MAX_SUBSETS {
        best_subset(&cross, &energy, want)
    } else {
        greedy_subset(&cross, &energy, want)
    };
    let mut columns: Vec<Vec<f64>> = chosen.into_iter().map(|i| cands[i].clone()).collect();
    columns.resize(k, vec![0.0; n]);
    Matrix::from_columns(n, &columns)
}

/// Cap on the zero-forced starts generated per call.
const MAX_ZERO_FORCED: usize = 4096;

/// Vectors of the span of `basis` (orthonormal, `r` vectors) that vanish on
/// `r - 1` chosen coordinates, one per coordinate subset in lexicographic
/// order. A sparse member of the span is reached exactly whenever the zeroed
/// coordinates lie outside its support and pin it down.
fn zero_forced_starts(basis: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let r = basis.len();
    if r < 2 {
        return Vec::new();
    }
    let z = r - 1;
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..z).collect();
    loop {
        // Coefficients c with sum_b c_b basis[b][i] = 0 for i in idx: the
        // eigenvector of A^T A (A = rows idx of the basis) with the smallest
        // eigenvalue.
        let ata = Matrix::from_fn(r, r, |a, b| idx.iter().map(|&i| basis[a][i] * basis[b][i]).sum())
            .expect("finite basis");
        let e = sym_eigen(&ata);
        let c = &e.vectors[r - 1];
        out.push((0..n).map(|i| (0..r).map(|b| c[b] * basis[b][i]).sum()).collect());
        if out.len() >= MAX_ZERO_FORCED {
            return out;
        }
        let mut i = z;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - z + i {
                idx[i] += 1;
                for j in i + 1..z {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let mut acc: usize = 1;
    for i in 0..k.min(n) {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    if k > n {
        0
    } else {
        acc
    }
}

/// `tr((V^T V)^{-1} V^T G V)` for the columns `idx`, read off the
/// precomputed cross products; `None` when they are numerically dependent.
fn captured(cross: &Matrix, energy: &Matrix, idx: &[usize]) -> Option<f64> {
    let r = idx.len();
    // Cholesky of the r x r Gram of the chosen columns.
    let mut l = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..=i {
            let mut x = cross.get(idx[i], idx[j]);
            for t in 0..j {
                x -= l[i * r + t] * l[j * r + t];
            }
            if i == j {
                if !(x > 1e-10) {
                    return None;
                }
                l[i * r + i] = libm::sqrt(x);
            } else {
                l[i * r + j] = x / l[j * r + j];
            }
        }
    }
    // tr(L^{-T} L^{-1} H) = ||L^{-1} H^{1/2}||^2, computed as tr(L^{-1} H L^{-T}).
    let mut w = vec![0.0; r * r];
    for b in 0..r {
        for i in 0..r {
            let mut x = energy.get(idx[i], idx[b]);
            for t in 0..i {
                x -= l[i * r + t] * w[t * r + b];
            }
            w[i * r + b] = x / l[i * r + i];
        }
    }
    let mut tr = 0.0;
    for i in 0..r {
        // row i of L^{-1} H, then solve against L^T on the right.
        let mut z = vec![0.0; r];
        for j in 0..r {
            let mut x = w[i * r + j];
            for t in 0..j {
                x -= z[t] * l[j * r + t];
            }
            z[j] = x / l[j * r + j];
        }
        tr += z[i];
    }
    Some(tr)
}

/// Lexicographically first subset of size `k` with the largest captured
/// energy (up to a relative `1e-12`).
fn best_subset(cross: &Matrix, energy: &Matrix, k: usize) -> Vec<usize> {
    let c = cross.rows();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        if let Some(e) = captured(cross, energy, &idx) {
            if best.as_ref().is_none_or(|(b, _)| e > *b + 1e-12 * b.abs()) {
                best = Some((e, idx.clone()));
            }
        }
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return best.map_or_else(|| greedy_subset(cross, energy, k), |(_, v)| v);
            }
            i -= 1;
            if idx[i] < c - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn greedy_subset(cross: &Matrix, energy: &Matrix, k: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(f64, usize)> = None;
        for cand in 0..cross.rows() {
            if chosen.contains(&cand) {
                continue;
            }
            chosen.push(cand);
            let e = captured(cross, energy, &chosen);
            chosen.pop();
            if let Some(e) = e {
                if best.is_none_or(|(b, _)| e > b + 1e-12 * b.abs()) {
                    best = Some((e, cand));
                }
            }
        }
        match best {
            Some((_, cand)) => chosen.push(cand),
            None => break,
        }
    }
    chosen
}

/// First `k` `s`-sparse principal components (left singular directions) of
/// `m`, one per column of the returned `rows x k` matrix. Each column has at
/// most `s` nonzeros, unit norm (or is zero past the numerical rank) and a
/// positive first nonzero entry.
pub fn sparse_pc(m: &Matrix, s: usize, k: usize, opts: &SparsePcaOptions) -> Result<Matrix> {
    if k > m.rows().min(m.cols()) {
        return Err(invalid!(
            "component count {k} exceeds min({}, {})",
            m.rows(),
            m.cols()
        ));
    }
    sparse_components_from_gram(&m.gram(), s, k, opts)
}

/// `T x_1 W_1 ... x_d W_d` with `W_k` the pseudo-inverse of `factors[k]`.
fn least_squares_core(t: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    let mut core = t.clone();
    for (k, u) in factors.iter().enumerate() {
        core = mode_product(&core, &pseudo_inverse(u, 1e-12), k)?;
    }
    Ok(core)
}

fn keep_if_better(t: &DenseTensor, candidate: TuckerFactors) -> Result<TuckerFactors> {
    let resid = frob_norm(&t.sub(&candidate.compose())?);
    if resid <= frob_norm(t) {
        Ok(candidate)
    } else {
        TuckerFactors::zero(t.dims(), candidate.rank(), candidate.sparsity())
    }
}

/// Sparse higher-order SVD: per-mode sparse principal components, then the
/// core that best fits `t` on those factors. Never worse than the zero tensor.
pub fn project_sparse_hosvd(t: &DenseTensor, cfg: &ProjectionConfig) -> Result<TuckerFactors> {
    check_tuples(t.dims(), &cfg.rank, &cfg.sparsity)?;
    cfg.pca.validate()?;
    let grams = (0..t.order())
        .map(|k| Ok(matricize(t, k)?.gram()))
        .collect::<Result<Vec<_>>>()?;
    let fit = |factors: Vec<Matrix>| -> Result<(f64, TuckerFactors)> {
        let core = least_squares_core(t, &factors)?;
        let f = TuckerFactors::new(core, factors, cfg.sparsity.clone())?;
        let resid = frob_norm(&t.sub(&f.compose())?);
        Ok((resid, f))
    };
    let deflated = fit((0..t.order())
        .map(|k| sparse_components_from_gram(&grams[k], cfg.sparsity[k], cfg.rank[k], &cfg.pca))
        .collect::<Result<Vec<_>>>()?)?;
    let subspace = fit((0..t.order())
        .map(|k| sparse_basis_from_gram(&grams[k], cfg.sparsity[k], cfg.rank[k], &cfg.pca))
        .collect::<Result<Vec<_>>>()?)?;
    // Plain deflation wins ties.
    let candidate = if subspace.0 < deflated.0 { subspace.1 } else { deflated.1 };
    keep_if_better(t, candidate)
}

/// Truncated HOSVD: top-`r_k` left singular vectors of every matricization
/// and the orthogonal-projection core.
pub fn project_tucker(t: &DenseTensor, rank: &[usize]) -> Result<TuckerFactors> {
    let dims = t.dims().to_vec();
    check_tuples(&dims, rank, &dims)?;
    let mut factors = Vec::with_capacity(t.order());
    for k in 0..t.order() {
        let gram = matricize(t, k)?.gram();
        let eig = sym_eigen(&gram);
        let top = eig.values[0].max(0.0);
        let cols: Vec<Vec<f64>> = (0..rank[k])
            .map(|j| {
                if top > 0.0 && eig.values[j] > RANK_CUT * top {
                    let mut v = eig.vectors[j].clone();
                    fix_sign(&mut v);
                    v
                } else {
                    vec![0.0; dims[k]]
                }
            })
            .collect();
        factors.push(Matrix::from_columns(dims[k], &cols)?);
    }
    let mut core = t.clone();
    for (k, u) in factors.iter().enumerate() {
        core = mode_product(&core, &u.transpose(), k)?;
    }
    let candidate = TuckerFactors::new(core, factors, dims)?;
    keep_if_better(t, candidate)
}
