//! Debiased-lasso construction.
//!
//! The penalized fit `theta~` carries shrinkage bias. The one-step correction
//!
//! ```text
//!   theta~_d = theta~ - Theta_hat * grad_loss(theta~)
//! ```
//!
//! removes it coordinate-wise, where `Theta_hat` approximately inverts the
//! Hessian of the empirical loss. `Theta_hat` is built one row at a time by
//! nodewise regression on the weighted design: column `j` is regressed on the
//! remaining columns with an l1 penalty, and the row is assembled from the
//! regression coefficients and the residual scale
//!
//! ```text
//!   tau_j^2 = (1/n) ||X_j - X_{-j} gamma_j||^2 + lambda_nw * ||gamma_j||_1.
//! ```
//!
//! That particular scale makes the identity
//! `(1/n) X_j^T X Theta_hat_j^T = 1` hold exactly at the nodewise optimum,
//! and the remaining coordinates obey the KKT box bound
//! `|(Sigma_hat Theta_hat_j^T)_l| <= lambda_nw / tau_j^2`; `coherence_report`
//! verifies both.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lasso::{cd_quadratic, smooth_gradient, WEIGHT_FLOOR};
use crate::loss::{evaluate_loss, LossKind};
use crate::mat::{dot, Mat};
use crate::model::Dataset;

/// Convergence tolerance for nodewise fits. Tight enough that the KKT-based
/// coherence identities hold to 1e-8 slack.
const NODEWISE_TOL: f64 = 1e-11;
const NODEWISE_MAX_SWEEPS: usize = 20_000;

/// One nodewise regression: coefficients, residual scale, assembled row.
#[derive(Debug, Clone)]
pub struct NodewiseFit {
    /// Regression coefficients of column `j` on the remaining columns
    /// (length d - 1, in column order with `j` removed).
    pub gamma: Vec<f64>,
    /// Residual scale `tau_j^2`, strictly positive.
    pub tau_sq: f64,
    /// Row `j` of the approximate precision matrix (length d):
    /// `1/tau^2` at position `j` and `-gamma_l / tau^2` elsewhere.
    pub row: Vec<f64>,
}

/// Approximate inverse Hessian assembled from all nodewise rows.
#[derive(Debug, Clone)]
pub struct PrecisionEstimate {
    pub rows: Vec<NodewiseFit>,
    pub nodewise_lambda: f64,
}

impl PrecisionEstimate {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// `Theta_hat * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| dot(&r.row, v)).collect()
    }
}

/// KKT-coherence diagnostics for a precision estimate.
#[derive(Debug, Clone)]
pub struct CoherenceReport {
    /// `max_j |(Sigma_hat Theta_hat_j^T)_j - 1|`.
    pub unit_diag_error: f64,
    /// Per row: `||Sigma_hat Theta_hat_j^T - e_j||_inf <= lambda/tau_j^2 + 1e-8`.
    pub offdiag_bound_ok: Vec<bool>,
    /// `max_j ||Sigma_hat Theta_hat_j^T - e_j||_inf` (generalized coherence).
    pub max_coherence: f64,
}

/// Rescales each observation by the square root of the loss curvature at the
/// current fit: row `i` becomes `sqrt(rho''(y_i, x_i^T coef)) * x_i`.
/// Squared loss has unit curvature, so the design is returned unchanged;
/// logistic curvature is floored at the solver's working-weight floor.
pub fn weighted_design(ds: &Dataset, kind: LossKind, coef: &[f64]) -> Result<Mat> {
    match kind {
        LossKind::Squared => Ok(ds.design.clone()),
        LossKind::Logistic => {
            let a = ds.design.mul_vec(coef);
            let mut w = vec![0.0; ds.n()];
            for i in 0..ds.n() {
                let t = evaluate_loss(kind, ds.response[i], a[i])?;
                w[i] = t.d2.max(WEIGHT_FLOOR).sqrt();
            }
            let mut out = ds.design.clone();
            for j in 0..out.n_cols() {
                for (v, &wi) in out.col_mut(j).iter_mut().zip(&w) {
                    *v *= wi;
                }
            }
            Ok(out)
        }
    }
}

/// Solves the nodewise lasso for column `j` and assembles the precision row.
pub fn fit_nodewise(wdesign: &Mat, j: usize, lambda_nw: f64) -> Result<NodewiseFit> {
    let d = wdesign.n_cols();
    if j >= d {
        return Err(Error::invalid(format!("column {j} out of range (d = {d})")));
    }
    if !(lambda_nw >= 0.0) {
        return Err(Error::invalid("nodewise lambda must be >= 0".to_string()));
    }

    let target = wdesign.col(j).to_vec();
    let sol = cd_quadratic(
        wdesign,
        &target,
        None,
        lambda_nw,
        NODEWISE_TOL,
        NODEWISE_MAX_SWEEPS,
        Some(j),
        None,
    );

    let l1: f64 = sol.coef.iter().map(|g| g.abs()).sum();
    let tau_sq = 2.0 * sol.half_rss + lambda_nw * l1;
    if tau_sq < 1e-12 {
        return Err(Error::DegenerateColumn { column: j, tau_sq });
    }

    let gamma: Vec<f64> = sol
        .coef
        .iter()
        .enumerate()
        .filter(|&(l, _)| l != j)
        .map(|(_, &g)| g)
        .collect();
    let mut row = vec![0.0; d];
    let inv_tau = 1.0 / tau_sq;
    for (l, &g) in sol.coef.iter().enumerate() {
        row[l] = if l == j { inv_tau } else { -g * inv_tau };
    }

    Ok(NodewiseFit { gamma, tau_sq, row })
}

/// Runs the nodewise regression for every column. Rows are independent and
/// solved concurrently, merged in column order.
pub fn build_precision(wdesign: &Mat, lambda_nw: f64) -> Result<PrecisionEstimate> {
    let d = wdesign.n_cols();
    let rows: Result<Vec<NodewiseFit>> = (0..d)
        .into_par_iter()
        .map(|j| fit_nodewise(wdesign, j, lambda_nw))
        .collect();
    Ok(PrecisionEstimate {
        rows: rows?,
        nodewise_lambda: lambda_nw,
    })
}

/// One-step corrected estimate `coef - Theta_hat * grad_loss(coef)`.
pub fn debiased_estimate(
    ds: &Dataset,
    kind: LossKind,
    lasso_coef: &[f64],
    prec: &PrecisionEstimate,
) -> Result<Vec<f64>> {
    if lasso_coef.len() != ds.dim() || prec.dim() != ds.dim() {
        return Err(Error::dims(format!(
            "coef {} / precision {} vs design {}",
            lasso_coef.len(),
            prec.dim(),
            ds.dim()
        )));
    }
    let grad = smooth_gradient(ds, kind, lasso_coef)?;
    let correction = prec.mul_vec(&grad);
    Ok(lasso_coef
        .iter()
        .zip(&correction)
        .map(|(&t, &c)| t - c)
        .collect())
}

/// Verifies the nodewise KKT identities against the empirical gram matrix
/// `Sigma_hat = (1/n) W^T W` of the weighted design.
pub fn coherence_report(wdesign: &Mat, prec: &PrecisionEstimate) -> CoherenceReport {
    let d = wdesign.n_cols();
    let n = wdesign.n_rows() as f64;
    let lambda = prec.nodewise_lambda;

    // Sigma_hat * Theta_hat_j^T computed as (1/n) W^T (W theta_j); the rows
    // are sparse so the first product is cheap.
    let products: Vec<Vec<f64>> = prec
        .rows
        .par_iter()
        .map(|fit| {
            let wv = wdesign.mul_vec(&fit.row);
            let mut s = wdesign.tr_mul_vec(&wv);
            for x in &mut s {
                *x /= n;
            }
            s
        })
        .collect();

    let mut unit_diag_error = 0.0f64;
    let mut max_coherence = 0.0f64;
    let mut offdiag_bound_ok = Vec::with_capacity(d);
    for (j, s) in products.iter().enumerate() {
        let mut inf = 0.0f64;
        for (l, &v) in s.iter().enumerate() {
            let e = if l == j { v - 1.0 } else { v };
            inf = inf.max(e.abs());
        }
        unit_diag_error = unit_diag_error.max((s[j] - 1.0).abs());
        max_coherence = max_coherence.max(inf);
        offdiag_bound_ok.push(inf <= lambda / prec.rows[j].tau_sq + 1e-8);
    }

    CoherenceReport {
        unit_diag_error,
        offdiag_bound_ok,
        max_coherence,
    }
}
