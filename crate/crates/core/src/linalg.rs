//! Small dense symmetric eigen-solver and helpers for the projection step.
//! Matrices here are at most `max n_i` square, so a cyclic Jacobi sweep is
//! accurate and cheap enough.

use alloc::vec;
use alloc::vec::Vec;

use crate::tensor::Matrix;

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in descending order (ties keep the lower original index first).
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi eigen-decomposition. Only the upper triangle of `a` is read
/// as authoritative; the input is symmetrised first.
pub fn sym_eigen(a: &Matrix) -> SymEigen {
    let n = a.rows();
    debug_assert_eq!(n, a.cols());
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a.get(i, j) + a.get(j, i));
        }
    }
    // v is stored row-major with eigenvectors as columns.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off <= 1e-32 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[j * n + j]
            .partial_cmp(&m[i * n + i])
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&k| m[k * n + k]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i * n + k]).collect())
        .collect();
    SymEigen { values, vectors }
}

/// Moore-Penrose pseudo-inverse of `u` (n x r), computed through the
/// eigen-decomposition of `u^T u`. Directions with eigenvalue below
/// `rel_cut * max eigenvalue` are dropped.
pub fn pseudo_inverse(u: &Matrix, rel_cut: f64) -> Matrix {
    let r = u.cols();
    let ut = u.transpose();
    let gram = ut.gram();
    let eig = sym_eigen(&gram);
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    // (U^T U)^+ = sum_k v_k v_k^T / lambda_k
    let mut ginv = vec![0.0; r * r];
    for (lam, vec_k) in eig.values.iter().zip(&eig.vectors) {
        if *lam <= rel_cut * top || *lam <= 0.0 {
            continue;
        }
        for i in 0..r {
            for j in 0..r {
                ginv[i * r + j] += vec_k[i] * vec_k[j] / lam;
            }
        }
    }
    let ginv = Matrix::from_parts(r, r, ginv);
    ginv.matmul(&ut).expect("shapes agree by construction")
}
