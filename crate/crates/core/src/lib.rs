//! Sparse, low-Tucker-rank tensor regression.
//!
//! Estimates `B` from `y_i = <X_i, B> + eta_i` when `B = S x_1 U_1 ... x_d U_d`
//! has a small core and factor matrices with sparse columns. The crate is
//! `no_std` (it needs `alloc`); file formats, timing and the experiment
//! driver live in the `tuckreg` crate.
//!
//! - [`tensor`]: dense tensors, matricization, n-mode products.
//! - [`model`]: structured tensors, the synthetic generator, direct sums.
//! - [`measure`]: seeded sub-Gaussian measurement maps and the RIP probe.
//! - [`projection`]: sparse HOSVD and truncated HOSVD.
//! - [`solver`]: projected gradient descent and the l1 baseline.
//! - [`bounds`]: covering-number and sample-complexity formulas.
//! - [`metrics`]: estimation error, classification scores, percentiles.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

mod error;
mod linalg;

pub mod bounds;
pub mod measure;
pub mod metrics;
pub mod model;
pub mod projection;
pub mod rng;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use linalg::{pseudo_inverse, sym_eigen, SymEigen};
pub use measure::{DenseMap, IdentityMap, LinearMap, LinearMapSpec, RegressionDataset, SensingDistribution};
pub use model::{NormalizedTuckerFactors, TuckerFactors};
pub use projection::{ProjectionConfig, SparsePcaOptions};
pub use solver::{Clock, FitReport, Init, Method, NoClock, SolverConfig, StopReason};
pub use tensor::{DenseTensor, Matrix};
