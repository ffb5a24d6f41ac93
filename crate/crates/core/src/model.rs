//! Shared domain types and their validation.
//!
//! Everything downstream speaks these types. All reals are `f64` throughout
//! the crate. Types are immutable after construction and safe to share across
//! threads; validation is pure and report-based rather than failing, so
//! callers decide what to do with a bad input.

use crate::mat::Mat;

/// One node's local data: an `n_k x d` design matrix and a response vector.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub design: Mat,
    pub response: Vec<f64>,
    pub node_id: u64,
}

impl Dataset {
    pub fn new(design: Mat, response: Vec<f64>, node_id: u64) -> Self {
        Dataset {
            design,
            response,
            node_id,
        }
    }

    pub fn n(&self) -> usize {
        self.design.n_rows()
    }

    pub fn dim(&self) -> usize {
        self.design.n_cols()
    }
}

/// The only payload that ever crosses a node boundary: penalized coefficients,
/// their debiased correction, the sample size, and a noise-scale estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSummary {
    pub lasso_coef: Vec<f64>,
    pub debiased_coef: Vec<f64>,
    pub sample_size: usize,
    pub noise_sd: f64,
}

/// How per-node values are weighted during aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Uniform,
    SampleSize,
}

/// Per-coordinate redescending radii and aggregation weights.
#[derive(Debug, Clone)]
pub struct AggregationSpec {
    /// Redescending radius per coordinate; values further than `eta[j]` from
    /// the candidate center exert no pull on coordinate `j`.
    pub eta: Vec<f64>,
    pub weighting: Weighting,
    /// Assumed upper bound on the outlier fraction, in [0, 3/7).
    pub alpha_bound: f64,
    /// Per-coordinate noise-scale bound used in threshold defaults.
    pub variance_bound: f64,
}

impl AggregationSpec {
    /// Uniform weighting with a constant radius on every coordinate.
    pub fn constant_eta(d: usize, eta: f64) -> Self {
        AggregationSpec {
            eta: vec![eta; d],
            weighting: Weighting::Uniform,
            alpha_bound: 0.0,
            variance_bound: 1.0,
        }
    }
}

/// Thresholding mode for sparsifying dense estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    Hard,
    Soft,
}

/// Global and per-node threshold levels.
#[derive(Debug, Clone)]
pub struct ThresholdSpec {
    pub mode: ThresholdMode,
    /// Level applied to the dense global aggregate.
    pub global_level: f64,
    /// Level applied to each node's dense delta, one per node.
    pub local_levels: Vec<f64>,
}

/// Output of the full integrative run.
#[derive(Debug, Clone)]
pub struct IntegrativeResult {
    /// Dense coordinate-wise aggregate of the debiased coefficients.
    pub dense_global: Vec<f64>,
    /// Thresholded global estimate.
    pub thresholded_global: Vec<f64>,
    /// Dense per-node deviations `debiased_k - dense_global`.
    pub dense_deltas: Vec<Vec<f64>>,
    /// Thresholded per-node deviations.
    pub thresholded_deltas: Vec<Vec<f64>>,
    /// Per-node solver and coherence diagnostics (never transmitted).
    pub diagnostics: Vec<crate::pipeline::NodeDiagnostics>,
    /// Communication accounting for the single round.
    pub comm_log: crate::simnet::CommLog,
}

/// Validates a dataset against its invariants; an empty report means the
/// dataset is well formed. The checks cover the full invariant list:
/// nonempty dimensions, matching response length, and finite entries.
pub fn validate_dataset(ds: &Dataset) -> Vec<String> {
    let mut report = Vec::new();
    if ds.design.n_rows() == 0 {
        report.push("design has no rows".to_string());
    }
    if ds.design.n_cols() == 0 {
        report.push("design has no columns".to_string());
    }
    if ds.response.len() != ds.design.n_rows() {
        report.push(format!(
            "response length mismatch: {} rows but {} responses",
            ds.design.n_rows(),
            ds.response.len()
        ));
    }
    for j in 0..ds.design.n_cols() {
        for (i, &v) in ds.design.col(j).iter().enumerate() {
            if !v.is_finite() {
                report.push(format!("non-finite entry at ({i}, {j})"));
            }
        }
    }
    for (i, &v) in ds.response.iter().enumerate() {
        if !v.is_finite() {
            report.push(format!("non-finite response at {i}"));
        }
    }
    report
}

/// Validates an aggregation spec for dimension `d`.
pub fn validate_spec(spec: &AggregationSpec, d: usize) -> Vec<String> {
    let mut report = Vec::new();
    if spec.eta.len() != d {
        report.push(format!(
            "eta length {} does not match dimension {d}",
            spec.eta.len()
        ));
    }
    for (j, &e) in spec.eta.iter().enumerate() {
        if !(e > 0.0) {
            report.push(format!("eta_{} <= 0", j + 1));
        }
    }
    if !(0.0..3.0 / 7.0).contains(&spec.alpha_bound) {
        report.push(format!(
            "alpha {} outside [0, 3/7)",
            spec.alpha_bound
        ));
    }
    if !(spec.variance_bound > 0.0) {
        report.push(format!("variance bound {} not positive", spec.variance_bound));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: &[Vec<f64>], y: Vec<f64>) -> Dataset {
        Dataset::new(Mat::from_rows(rows), y, 0)
    }

    #[test]
    fn well_formed_dataset_passes() {
        let d = ds(
            &[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
            vec![1.0, 2.0],
        );
        assert!(validate_dataset(&d).is_empty());
    }

    #[test]
    fn response_length_mismatch_reported() {
        let d = ds(
            &[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
            vec![1.0, 2.0, 3.0],
        );
        let report = validate_dataset(&d);
        assert_eq!(report.len(), 1);
        assert!(report[0].contains("response length mismatch"));
    }

    #[test]
    fn non_finite_entry_located() {
        let d = ds(
            &[vec![1.0, f64::NAN, 3.0], vec![4.0, 5.0, 6.0]],
            vec![1.0, 2.0],
        );
        let report = validate_dataset(&d);
        assert_eq!(report.len(), 1);
        assert!(report[0].contains("non-finite entry at (0, 1)"));
    }

    #[test]
    fn validation_is_pure() {
        let d = ds(&[vec![1.0, f64::INFINITY]], vec![0.5]);
        assert_eq!(validate_dataset(&d), validate_dataset(&d));
    }

    #[test]
    fn spec_validation() {
        let good = AggregationSpec {
            eta: vec![5.0, 5.0],
            weighting: Weighting::Uniform,
            alpha_bound: 0.1,
            variance_bound: 1.0,
        };
        assert!(validate_spec(&good, 2).is_empty());

        let neg_eta = AggregationSpec {
            eta: vec![5.0, -1.0],
            ..good.clone()
        };
        let report = validate_spec(&neg_eta, 2);
        assert_eq!(report.len(), 1);
        assert!(report[0].contains("eta_2 <= 0"));

        let bad_alpha = AggregationSpec {
            alpha_bound: 0.5,
            ..good
        };
        let report = validate_spec(&bad_alpha, 2);
        assert_eq!(report.len(), 1);
        assert!(report[0].contains("outside [0, 3/7)"));
    }
}
