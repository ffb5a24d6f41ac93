//! Integrative high-dimensional regression across heterogeneous datasets.
//!
//! Each dataset (node) fits an l1-penalized M-estimator, debiases it with a
//! nodewise-regression precision estimate, and uploads a single summary
//! vector. The coordinator combines the debiased coefficients coordinate-wise
//! with a quadratic redescending loss, which averages the bulk of the values
//! and ignores distant outliers, then sparsifies the dense aggregate by hard
//! or soft thresholding. No raw samples ever cross a node boundary and the
//! protocol is one-shot: one upload per node, no further rounds.
//!
//! Module map:
//!
//! - [`model`] — shared domain types and their validation
//! - [`loss`] — per-observation losses with first and second derivatives
//! - [`lasso`] — cyclic coordinate-descent solver, penalty defaults, KKT diagnostics
//! - [`debias`] — weighted design, nodewise regressions, one-step correction
//! - [`aggregate`] — robust 1-D location estimation and baselines
//! - [`threshold`] — hard/soft thresholding and default levels
//! - [`pipeline`] — the end-to-end integrative estimator
//! - [`simnet`] — simulated summary-only message layer with byte accounting
//! - [`datagen`] — synthetic benchmark generator (AR-correlated trichotomized designs)
//! - [`metrics`] — error norms, support recovery, cross-validation
//! - [`rng`] — deterministic counter-based random streams

// Validation deliberately writes `!(x > 0.0)` so NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod datagen;
pub mod debias;
pub mod error;
pub mod lasso;
pub mod loss;
pub mod mat;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod simnet;
pub mod threshold;

pub use error::{Error, Result};
pub use mat::Mat;
pub use model::{AggregationSpec, Dataset, IntegrativeResult, LocalSummary, ThresholdSpec};
