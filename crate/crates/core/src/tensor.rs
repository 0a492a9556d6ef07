//! Dense order-d tensors and small dense matrices.
//!
//! Storage is C-order (last index varies fastest). Modes are 0-based in the
//! API. The mode-`k` matricization sends entry `T[i_0, .., i_{d-1}]` to row
//! `i_k` and column `sum_{l != k} i_l * J_l` with `J_l = prod_{m < l, m != k} n_m`,
//! i.e. the remaining indices are enumerated with the earliest mode varying
//! fastest.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, mismatch, Error, Result};

/// Order-d real tensor in C-order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(invalid!("tensor order must be at least 1"));
    }
    if let Some(k) = dims.iter().position(|&n| n == 0) {
        return Err(invalid!("dimension {k} is zero"));
    }
    dims.iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| invalid!("tensor size overflows usize"))
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|x| !x.is_finite()) {
        Some(p) => Err(invalid!("non-finite entry at flat position {p}")),
        None => Ok(()),
    }
}

impl DenseTensor {
    /// Builds a tensor from C-order data. Rejects empty or zero dimensions,
    /// a length mismatch and non-finite entries.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = check_dims(&dims)?;
        if data.len() != len {
            return Err(mismatch!(
                "data length {} does not match dims {:?} (expected {len})",
                data.len(),
                dims
            ));
        }
        check_finite(&data)?;
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let len = check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in C-order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = check_dims(dims)?;
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, dims);
        }
        Self::new(dims.to_vec(), data)
    }

    /// Internal constructor for values produced by arithmetic on valid tensors.
    pub(crate) fn from_parts(dims: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Self { dims, data }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Flat C-order offset of a multi-index.
    pub fn offset(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.dims.len() {
            return Err(mismatch!(
                "index of order {} for tensor of order {}",
                idx.len(),
                self.dims.len()
            ));
        }
        let mut off = 0;
        for (&i, &n) in idx.iter().zip(&self.dims) {
            if i >= n {
                return Err(Error::OutOfRange { index: i, len: n });
            }
            off = off * n + i;
        }
        Ok(off)
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        self.offset(idx).map(|o| self.data[o])
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self::from_parts(self.dims.clone(), self.data.iter().map(|x| alpha * x).collect())
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &DenseTensor) -> Result<()> {
        self.same_dims(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    /// `self - other`.
    pub fn sub(&self, other: &DenseTensor) -> Result<Self> {
        self.same_dims(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self::from_parts(self.dims.clone(), data))
    }

    fn same_dims(&self, other: &DenseTensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(mismatch!("dims {:?} vs {:?}", self.dims, other.dims));
        }
        Ok(())
    }
}

/// Advances a C-order multi-index by one position (wrapping at the end).
pub(crate) fn increment(idx: &mut [usize], dims: &[usize]) {
    for k in (0..dims.len()).rev() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return;
        }
        idx[k] = 0;
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid!("matrix shape {rows}x{cols} has a zero extent"));
        }
        if data.len() != rows * cols {
            return Err(mismatch!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            ));
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Builds a matrix from its columns.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        if columns.iter().any(|c| c.len() != rows) {
            return Err(mismatch!("column length differs from {rows}"));
        }
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Matrix::from_parts(self.cols, self.rows, data)
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(mismatch!(
                "cannot multiply {}x{} by {}x{}",
                self.rows,
                self.cols,
                other.rows,
                other.cols
            ));
        }
        let mut out = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            let row = &mut out[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(Matrix::from_parts(self.rows, other.cols, out))
    }

    /// `self * self^T`, the row Gram matrix.
    pub fn gram(&self) -> Matrix {
        let n = self.rows;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            let ri = &self.data[i * self.cols..(i + 1) * self.cols];
            for j in i..n {
                let rj = &self.data[j * self.cols..(j + 1) * self.cols];
                let v: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        Matrix::from_parts(n, n, g)
    }

    pub fn frob_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }
}

fn check_mode(t: &DenseTensor, mode: usize) -> Result<()> {
    if mode >= t.order() {
        return Err(invalid!(
            "mode {mode} out of range for tensor of order {}",
            t.order()
        ));
    }
    Ok(())
}

/// Column strides of the mode-`mode` matricization, one per tensor mode
/// (zero for `mode` itself).
fn unfolding_strides(dims: &[usize], mode: usize) -> Vec<usize> {
    let mut strides = vec![0; dims.len()];
    let mut acc = 1;
    for (k, &n) in dims.iter().enumerate() {
        if k != mode {
            strides[k] = acc;
            acc *= n;
        }
    }
    strides
}

/// Mode-`mode` unfolding: rows indexed by mode `mode`, columns enumerate the
/// remaining indices with the earliest mode varying fastest.
pub fn matricize(t: &DenseTensor, mode: usize) -> Result<Matrix> {
    check_mode(t, mode)?;
    let rows = t.dims[mode];
    let cols = t.len() / rows;
    let strides = unfolding_strides(&t.dims, mode);
    let mut out = vec![0.0; t.len()];
    let mut idx = vec![0usize; t.order()];
    for &v in &t.data {
        let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        out[idx[mode] * cols + col] = v;
        increment(&mut idx, &t.dims);
    }
    Ok(Matrix::from_parts(rows, cols, out))
}

/// Inverse of [`matricize`].
pub fn tensorize(m: &Matrix, mode: usize, dims: &[usize]) -> Result<DenseTensor> {
    let len = check_dims(dims)?;
    if mode >= dims.len() {
        return Err(invalid!("mode {mode} out of range for order {}", dims.len()));
    }
    if m.rows != dims[mode] || m.rows * m.cols != len {
        return Err(mismatch!(
            "{}x{} matrix cannot fold into dims {:?} along mode {mode}",
            m.rows,
            m.cols,
            dims
        ));
    }
    let strides = unfolding_strides(dims, mode);
    let mut data = Vec::with_capacity(len);
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..len {
        let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        data.push(m.data[idx[mode] * m.cols + col]);
        increment(&mut idx, dims);
    }
    Ok(DenseTensor::from_parts(dims.to_vec(), data))
}

/// n-mode product `T x_mode U`, i.e. `(T x_mode U)_(mode) = U * T_(mode)`.
pub fn mode_product(t: &DenseTensor, u: &Matrix, mode: usize) -> Result<DenseTensor> {
    check_mode(t, mode)?;
    let n = t.dims[mode];
    if u.cols != n {
        return Err(mismatch!(
            "factor has {} columns but mode {mode} has size {n}",
            u.cols
        ));
    }
    let outer: usize = t.dims[..mode].iter().product();
    let inner: usize = t.dims[mode + 1..].iter().product();
    let p = u.rows;
    let mut out = vec![0.0; outer * p * inner];
    for o in 0..outer {
        let src = &t.data[o * n * inner..(o + 1) * n * inner];
        let dst = &mut out[o * p * inner..(o + 1) * p * inner];
        for a in 0..p {
            let drow = &mut dst[a * inner..(a + 1) * inner];
            for i in 0..n {
                let w = u.get(a, i);
                if w == 0.0 {
                    continue;
                }
                let srow = &src[i * inner..(i + 1) * inner];
                for (d, s) in drow.iter_mut().zip(srow) {
                    *d += w * s;
                }
            }
        }
    }
    let mut dims = t.dims.clone();
    dims[mode] = p;
    Ok(DenseTensor::from_parts(dims, out))
}

/// `core x_0 factors[0] x_1 factors[1] ... x_{d-1} factors[d-1]`.
pub fn tucker_compose(core: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    if factors.len() != core.order() {
        return Err(mismatch!(
            "{} factors for a core of order {}",
            factors.len(),
            core.order()
        ));
    }
    let mut acc = core.clone();
    for (k, u) in factors.iter().enumerate() {
        acc = mode_product(&acc, u, k)?;
    }
    Ok(acc)
}

pub fn inner(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    a.same_dims(b)?;
    Ok(dot(&a.data, &b.data))
}

pub fn frob_norm(t: &DenseTensor) -> f64 {
    libm::sqrt(t.data.iter().map(|x| x * x).sum())
}

pub fn l1_norm(t: &DenseTensor) -> f64 {
    t.data.iter().map(|x| x.abs()).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}
