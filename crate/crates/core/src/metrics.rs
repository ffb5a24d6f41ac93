//! Error norms, support-recovery metrics, and (radius, threshold)
//! cross-validation.

use crate::aggregate::aggregate_vector;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::model::Dataset;
use crate::pipeline::PipelineConfig;
use crate::rng::{Purpose, StreamRng};
use crate::simnet::execute_round;
use crate::threshold::apply_threshold;

/// l1 / l2 / sup-norm errors of an estimate against a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

/// Support-recovery summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportReport {
    pub true_support_size: usize,
    /// True when the estimated support contains the reference support.
    pub recovered: bool,
    pub precision: f64,
    pub recall: f64,
}

/// Norms of `est - truth`.
pub fn norm_errors(est: &[f64], truth: &[f64]) -> Result<ErrorReport> {
    if est.len() != truth.len() {
        return Err(Error::dims(format!(
            "estimate length {} vs truth {}",
            est.len(),
            truth.len()
        )));
    }
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    let mut linf = 0.0f64;
    for (&a, &b) in est.iter().zip(truth) {
        let d = (a - b).abs();
        l1 += d;
        l2 += d * d;
        linf = linf.max(d);
    }
    Ok(ErrorReport {
        l1,
        l2: l2.sqrt(),
        linf,
    })
}

/// Supports computed with `|v| > zero_tol`; recall is 1 on an empty
/// reference support by convention.
pub fn support_metrics(est: &[f64], truth: &[f64], zero_tol: f64) -> Result<SupportReport> {
    if est.len() != truth.len() {
        return Err(Error::dims("length mismatch".to_string()));
    }
    let est_s: Vec<bool> = est.iter().map(|&v| v.abs() > zero_tol).collect();
    let truth_s: Vec<bool> = truth.iter().map(|&v| v.abs() > zero_tol).collect();
    let true_size = truth_s.iter().filter(|&&b| b).count();
    let est_size = est_s.iter().filter(|&&b| b).count();
    let hits = est_s
        .iter()
        .zip(&truth_s)
        .filter(|&(&e, &t)| e && t)
        .count();
    let recovered = truth_s
        .iter()
        .zip(&est_s)
        .all(|(&t, &e)| !t || e);
    let precision = if est_size == 0 {
        1.0
    } else {
        hits as f64 / est_size as f64
    };
    let recall = if true_size == 0 {
        1.0
    } else {
        hits as f64 / true_size as f64
    };
    Ok(SupportReport {
        true_support_size: true_size,
        recovered,
        precision,
        recall,
    })
}

/// Selects the global pair (eta, t) by K-fold cross-validation.
///
/// Folds are formed within each node's rows, never across nodes, so no raw
/// samples leave their node. For each fold the per-node fits run once on the
/// training rows; every candidate radius then aggregates the same summaries
/// and every candidate threshold sparsifies the same dense aggregate. Pairs
/// are scored by squared prediction error of the thresholded global estimate
/// on held-out rows pooled over nodes and folds; ties prefer the smaller
/// threshold, then the smaller radius.
pub fn cv_select(
    datasets: &[Dataset],
    cfg: &PipelineConfig,
    eta_grid: &[f64],
    t_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if eta_grid.is_empty() || t_grid.is_empty() {
        return Err(Error::invalid("cv grids must be nonempty"));
    }
    if folds < 2 {
        return Err(Error::invalid("cv needs folds >= 2"));
    }
    for ds in datasets {
        if ds.n() < 2 * folds {
            return Err(Error::invalid(format!(
                "node {}: a fold would have fewer than 2 rows ({} rows, {folds} folds)",
                ds.node_id,
                ds.n()
            )));
        }
    }
    let d = datasets
        .first()
        .map(|ds| ds.dim())
        .ok_or_else(|| Error::invalid("cv needs datasets"))?;

    // Node-local fold assignment, deterministic in (seed, node).
    let assignments: Vec<Vec<usize>> = datasets
        .iter()
        .map(|ds| {
            let mut rows: Vec<usize> = (0..ds.n()).collect();
            let mut rng = StreamRng::new(seed, ds.node_id, Purpose::Folds);
            rng.shuffle(&mut rows);
            let mut fold_of = vec![0usize; ds.n()];
            for (pos, &row) in rows.iter().enumerate() {
                fold_of[row] = pos % folds;
            }
            fold_of
        })
        .collect();

    let mut sse = vec![0.0f64; eta_grid.len() * t_grid.len()];
    let mut count = 0usize;

    for fold in 0..folds {
        let mut train = Vec::with_capacity(datasets.len());
        let mut tests = Vec::with_capacity(datasets.len());
        for (ds, fold_of) in datasets.iter().zip(&assignments) {
            let mut tr_rows = Vec::new();
            let mut te_rows = Vec::new();
            for (i, &f) in fold_of.iter().enumerate() {
                if f == fold {
                    te_rows.push(i);
                } else {
                    tr_rows.push(i);
                }
            }
            let take = |rows: &[usize]| -> Dataset {
                let mut m = Mat::zeros(rows.len(), ds.dim());
                let mut y = Vec::with_capacity(rows.len());
                for (out_i, &i) in rows.iter().enumerate() {
                    for j in 0..ds.dim() {
                        m.set(out_i, j, ds.design.get(i, j));
                    }
                    y.push(ds.response[i]);
                }
                Dataset::new(m, y, ds.node_id)
            };
            train.push(take(&tr_rows));
            tests.push(take(&te_rows));
        }

        let round = execute_round(&train, cfg)?;
        for (ei, &eta) in eta_grid.iter().enumerate() {
            let mut spec = cfg.spec.clone();
            spec.eta = vec![eta; d];
            let dense = aggregate_vector(&round.summaries, &spec)?;
            for (ti, &t) in t_grid.iter().enumerate() {
                let global = apply_threshold(&dense, t, cfg.threshold_mode)?;
                let mut local_sse = 0.0;
                for te in &tests {
                    let pred = te.design.mul_vec(&global);
                    for (&p, &y) in pred.iter().zip(&te.response) {
                        local_sse += (p - y) * (p - y);
                    }
                }
                sse[ei * t_grid.len() + ti] += local_sse;
            }
        }
        count += tests.iter().map(|t| t.n()).sum::<usize>();
    }

    let mut best = (f64::INFINITY, f64::INFINITY, f64::INFINITY); // (score, t, eta)
    for (ei, &eta) in eta_grid.iter().enumerate() {
        for (ti, &t) in t_grid.iter().enumerate() {
            let score = sse[ei * t_grid.len() + ti] / count as f64;
            let tie = (score - best.0).abs() <= 1e-12 * (1.0 + best.0.abs());
            if score < best.0 && !tie {
                best = (score, t, eta);
            } else if tie && (t < best.1 || (t == best.1 && eta < best.2)) {
                best = (best.0.min(score), t, eta);
            }
        }
    }
    Ok((best.2, best.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_scenario, Scenario, ScenarioKind};

    #[test]
    fn norm_examples() {
        let r = norm_errors(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((r.l1, r.l2, r.linf), (0.0, 0.0, 0.0));
        let r = norm_errors(&[3.0, 4.0], &[0.0, 0.0]).unwrap();
        assert_eq!((r.l1, r.l2, r.linf), (7.0, 5.0, 4.0));
        let r = norm_errors(&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!((r.l1, r.l2, r.linf), (1.0, 1.0, 1.0));
        assert!(norm_errors(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn norm_ordering_always_holds() {
        let mut rng = StreamRng::new(1, 0, Purpose::Misc);
        for _ in 0..200 {
            let n = 1 + rng.next_index(30);
            let a: Vec<f64> = (0..n).map(|_| rng.next_normal() * 3.0).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.next_normal() * 3.0).collect();
            let r = norm_errors(&a, &b).unwrap();
            assert!(r.linf <= r.l2 + 1e-12);
            assert!(r.l2 <= r.l1 + 1e-12);
        }
    }

    #[test]
    fn support_examples() {
        let truth = [1.0, 0.0, -2.0, 0.0];
        let exact = support_metrics(&[0.5, 0.0, -0.1, 0.0], &truth, 0.0).unwrap();
        assert!(exact.recovered);
        assert_eq!(exact.precision, 1.0);
        assert_eq!(exact.recall, 1.0);

        let extra = support_metrics(&[0.5, 0.3, -0.1, 0.0], &truth, 0.0).unwrap();
        assert!(extra.recovered);
        assert!(extra.precision < 1.0);
        assert_eq!(extra.recall, 1.0);

        let empty_truth = support_metrics(&[0.5, 0.0], &[0.0, 0.0], 0.0).unwrap();
        assert!(empty_truth.recovered);
        assert_eq!(empty_truth.recall, 1.0);
    }

    #[test]
    fn integer_supports_match_exact_sets() {
        let est = [1.0, 0.0, 3.0, -2.0, 0.0];
        let truth = [2.0, 0.0, 1.0, 0.0, 0.0];
        let r = support_metrics(&est, &truth, 0.0).unwrap();
        assert_eq!(r.true_support_size, 2);
        assert!(r.recovered);
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.recall, 1.0);
    }

    #[test]
    fn cv_single_point_grid_returns_it() {
        let sc = Scenario::uniform(ScenarioKind::GrowN, 2, 24, 12, 5);
        let (datasets, _, _) = gen_scenario(&sc).unwrap();
        let cfg = PipelineConfig::squared(12, 5.0);
        let pair = cv_select(&datasets, &cfg, &[5.0], &[0.1], 2, 9).unwrap();
        assert_eq!(pair, (5.0, 0.1));
    }

    #[test]
    fn cv_is_deterministic() {
        let sc = Scenario::uniform(ScenarioKind::GrowN, 2, 30, 12, 6);
        let (datasets, _, _) = gen_scenario(&sc).unwrap();
        let cfg = PipelineConfig::squared(12, 5.0);
        let grid_eta = [1.0, 5.0];
        let grid_t = [0.05, 0.5];
        let a = cv_select(&datasets, &cfg, &grid_eta, &grid_t, 3, 11).unwrap();
        let b = cv_select(&datasets, &cfg, &grid_eta, &grid_t, 3, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cv_rejects_tiny_folds() {
        let sc = Scenario::uniform(ScenarioKind::GrowN, 1, 5, 12, 6);
        let (datasets, _, _) = gen_scenario(&sc).unwrap();
        let cfg = PipelineConfig::squared(12, 5.0);
        assert!(cv_select(&datasets, &cfg, &[5.0], &[0.1], 3, 0).is_err());
    }

    #[test]
    fn cv_selected_pair_recovers_support_on_clean_scenario() {
        use crate::datagen::gen_design;
        use crate::pipeline::{run_integrative, ThresholdOverride};
        use crate::rng::{Purpose, StreamRng};
        // Near-noiseless nodes sharing one sparse truth: every radius in the
        // grid identifies the same global parameter, a sane threshold keeps
        // exactly its support, and a huge threshold destroys prediction.
        let d = 12;
        let mut truth = vec![0.0; d];
        for t in truth.iter_mut().take(5) {
            *t = 5.0;
        }
        let datasets: Vec<Dataset> = (0..3u64)
            .map(|k| {
                let design = gen_design(40, d, 130 + k);
                let mut noise = StreamRng::new(130 + k, k, Purpose::Noise);
                let y: Vec<f64> = design
                    .mul_vec(&truth)
                    .iter()
                    .map(|&v| v + 0.01 * noise.next_normal())
                    .collect();
                Dataset::new(design, y, k)
            })
            .collect();
        let cfg = PipelineConfig::squared(d, 5.0);
        let (eta, t) = cv_select(&datasets, &cfg, &[1.0, 5.0], &[0.3, 100.0], 2, 3).unwrap();
        assert_eq!(t, 0.3, "threshold 100 zeroes every coefficient");

        let mut refit_cfg = cfg.clone();
        refit_cfg.spec.eta = vec![eta; d];
        refit_cfg.threshold_override = Some(ThresholdOverride {
            global_level: t,
            local_levels: vec![t],
        });
        let result = run_integrative(&datasets, &refit_cfg).unwrap();
        let report = support_metrics(&result.thresholded_global, &truth, 1e-6).unwrap();
        assert!(report.recovered, "support not recovered");
        assert_eq!(report.precision, 1.0, "spurious coordinates kept");
    }
}
