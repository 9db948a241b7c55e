//! File formats, simulation harness and command-line interface for sparse
//! partial smoothing splines. The estimator itself lives in
//! `sparse_pspline_core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod io;
pub mod report;
pub mod sim;

pub use sparse_pspline_core as core;
