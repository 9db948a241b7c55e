//! Double-penalized partial smoothing splines.
//!
//! Fits `y = X beta + f(t) + noise` with a roughness penalty on `f` (order-m
//! Sobolev smoothing spline) and a weighted LASSO penalty on `beta`, so that
//! `f` is estimated smoothly while irrelevant linear covariates are set
//! exactly to zero.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod kernel;
mod linalg;
pub mod path;
pub mod psa;
pub mod smoother;
pub mod tuning;

pub use data::{collapse_ties, CollapsedRows, Dataset};
pub use error::{Error, Result};
pub use kernel::{
    gram_matrix, nullspace_matrix, reproducing_kernel, scaled_bernoulli, KnotGrid, SplineOrder,
};
pub use path::{
    cd_solve, kkt_residual, lars_path, psd_sqrt, transform, transform_with_root, LassoPath,
    PsdRoot, TransformedProblem,
};
pub use psa::{
    adaptive_weights, lqa_hat_matrix, partial_spline, predict, psa_fit, Profile, PsFit, PsaFit,
    WeightScheme,
};
pub use smoother::{
    evaluate_spline, factorize, influence_matrix, smooth, trace_influence, SmootherOutput,
    SpectralSmoother, SplineSystem,
};
pub use tuning::{
    bic_lambda2, gcv_lambda1, joint_gcv, log_grid, sigma2_from_fit, sigma2_hat, tune, BicCurve, GcvCurve,
    JointGcv, Lambda2Grid, TunedFit, TuningConfig, TuningMode,
};
