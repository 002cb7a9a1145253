//! Piecewise multilinear interpolation of random fields on `[0,1]^d`.
//!
//! The crate builds cross-regular sampling designs, evaluates the exact
//! integrated mean-squared error (IMSE) of multivariate piecewise linear
//! interpolation from a covariance kernel, and computes the asymptotic
//! constants, optimal knot allocations and knot densities for locally
//! stationary fields.
//!
//! ```
//! use mpli::{design, kernels::CovarianceModel, mse, quadrature::QuadratureSpec};
//!
//! let bm = CovarianceModel::brownian();
//! let alloc = design::Allocation::new(vec![4]).unwrap();
//! let grid = design::uniform_design(&alloc, &bm.decomposition()).unwrap();
//! let report = mse::imse(&bm, &grid, &QuadratureSpec::default()).unwrap();
//! assert!((report.imse_squared - 1.0 / 24.0).abs() < 1e-12);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod design;
pub mod error;
pub mod experiments;
pub mod interp;
pub mod kernels;
pub mod mse;
pub mod quadrature;

pub use error::{Error, Result};
