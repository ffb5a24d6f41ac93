//! Robust one-dimensional location estimation under the quadratic
//! redescending loss, plus the baseline identifications it is compared
//! against (mean, median, Huber, median+ridge).
//!
//! The central object is the per-coordinate problem
//!
//! ```text
//!   minimize over x:   f(x) = sum_k w_k * min((v_k - x)^2, eta^2)
//! ```
//!
//! The derivative of `min(u^2, eta^2)` vanishes outside `[-eta, eta]`, so
//! values further than `eta` from a candidate center exert no pull at all:
//! the minimizer is the weighted mean of whichever bulk of values wins.
//! `f` is piecewise quadratic with breakpoints at `v_k ± eta`, so a complete
//! candidate set is: the weighted mean of every contiguous sorted window of
//! span at most `2*eta`, every breakpoint `v_k ± eta`, and every `v_k`. The
//! exact global minimizer is found by evaluating `f` at each candidate;
//! cost is O(m^2) windows, trivial at per-coordinate scale.
//!
//! `oracle_grid_min` is an independent dense-grid check used by tests and
//! the acceptance suite; it never feeds the estimator.

use crate::error::{Error, Result};
use crate::model::{AggregationSpec, LocalSummary, Weighting};

/// Quadratic redescending loss `min(x^2, eta^2)`.
pub fn psi(x: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::invalid(format!("psi requires eta > 0, got {eta}")));
    }
    Ok((x * x).min(eta * eta))
}

#[inline]
fn psi_unchecked(x: f64, eta_sq: f64) -> f64 {
    (x * x).min(eta_sq)
}

/// One coordinate's location problem.
#[derive(Debug, Clone)]
pub struct LocationProblem {
    pub values: Vec<f64>,
    /// Positive weights: all ones for uniform aggregation, `n_k` for
    /// sample-size weighting.
    pub weights: Vec<f64>,
    pub eta: f64,
}

impl LocationProblem {
    pub fn uniform(values: Vec<f64>, eta: f64) -> Self {
        let m = values.len();
        LocationProblem {
            values,
            weights: vec![1.0; m],
            eta,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("location problem needs at least one value"));
        }
        if self.weights.len() != self.values.len() {
            return Err(Error::dims(format!(
                "{} values but {} weights",
                self.values.len(),
                self.weights.len()
            )));
        }
        if !self.weights.iter().all(|&w| w > 0.0 && w.is_finite()) {
            return Err(Error::invalid("weights must be positive and finite"));
        }
        if !(self.eta > 0.0) {
            return Err(Error::invalid(format!("eta must be > 0, got {}", self.eta)));
        }
        Ok(())
    }

    /// Objective `sum_k w_k * min((v_k - x)^2, eta^2)`.
    pub fn objective(&self, x: f64) -> f64 {
        let eta_sq = self.eta * self.eta;
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(&v, &w)| w * psi_unchecked(v - x, eta_sq))
            .sum()
    }

    /// Indices whose value lies within `eta` of `x` (boundary inclusive).
    pub fn inliers(&self, x: f64) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| (v - x).abs() <= self.eta)
            .map(|(k, _)| k)
            .collect()
    }
}

/// Solution of a location problem.
#[derive(Debug, Clone)]
pub struct LocationSolution {
    pub minimizer: f64,
    pub objective: f64,
    /// Indices within `eta` of the minimizer.
    pub inlier_set: Vec<usize>,
    /// False when a distinct candidate tied the minimal objective within
    /// 1e-12; the returned representative is then the one with the larger
    /// inlier count, ties broken toward the smaller minimizer.
    pub unique: bool,
}

/// Weighted mean and weight mass of the sorted window `lo..=hi` given prefix
/// sums of `w` and `w*v` over the sorted order. Shared by the aggregator and
/// the cluster check so both produce bit-identical means.
#[inline]
fn window_mean(pw: &[f64], pwv: &[f64], lo: usize, hi: usize) -> (f64, f64) {
    let mass = pw[hi + 1] - pw[lo];
    let mean = (pwv[hi + 1] - pwv[lo]) / mass;
    (mean, mass)
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    idx
}

fn candidates(p: &LocationProblem) -> Vec<f64> {
    let order = sorted_order(&p.values);
    let sorted: Vec<f64> = order.iter().map(|&k| p.values[k]).collect();
    let w_sorted: Vec<f64> = order.iter().map(|&k| p.weights[k]).collect();
    let m = sorted.len();

    let mut pw = vec![0.0; m + 1];
    let mut pwv = vec![0.0; m + 1];
    for i in 0..m {
        pw[i + 1] = pw[i] + w_sorted[i];
        pwv[i + 1] = pwv[i] + w_sorted[i] * sorted[i];
    }

    let span_limit = 2.0 * p.eta;
    let mut cands = Vec::with_capacity(m * (m + 1) / 2 + 3 * m);
    for lo in 0..m {
        for hi in lo..m {
            if sorted[hi] - sorted[lo] > span_limit {
                break;
            }
            cands.push(window_mean(&pw, &pwv, lo, hi).0);
        }
    }
    for &v in &sorted {
        cands.push(v);
        cands.push(v - p.eta);
        cands.push(v + p.eta);
    }
    cands
}

/// Exact global minimizer of the redescending location objective.
///
/// Ties within 1e-12 of the minimal objective are broken by larger inlier
/// count, then smaller minimizer value, and flagged via `unique = false`.
pub fn aggregate_location(p: &LocationProblem) -> Result<LocationSolution> {
    p.validate()?;

    let mut best_x = f64::NAN;
    let mut best_obj = f64::INFINITY;
    let mut evals: Vec<(f64, f64)> = Vec::new();
    for x in candidates(p) {
        let obj = p.objective(x);
        evals.push((x, obj));
        if obj < best_obj {
            best_obj = obj;
            best_x = x;
        }
    }

    // Gather near-optimal candidates and apply the tie-break rules.
    let tie_tol = 1e-12;
    let mut winner = best_x;
    let mut winner_inliers = p.inliers(best_x).len();
    let mut distinct_tie = false;
    for &(x, obj) in &evals {
        if obj > best_obj + tie_tol || x == winner {
            continue;
        }
        let count = p.inliers(x).len();
        if count > winner_inliers || (count == winner_inliers && x < winner) {
            winner = x;
            winner_inliers = count;
        }
    }
    let x_tol = 1e-8 * (1.0 + winner.abs());
    for &(x, obj) in &evals {
        if obj <= best_obj + tie_tol && (x - winner).abs() > x_tol {
            distinct_tie = true;
            break;
        }
    }

    Ok(LocationSolution {
        minimizer: winner,
        objective: p.objective(winner),
        inlier_set: p.inliers(winner),
        unique: !distinct_tie,
    })
}

/// Dense-grid oracle: evaluates the objective on a uniform grid over
/// `[min v - eta, max v + eta]` plus the analytic candidates and returns the
/// best point found. Test-side verification only.
pub fn oracle_grid_min(p: &LocationProblem, resolution: usize) -> (f64, f64) {
    let lo = p.values.iter().cloned().fold(f64::INFINITY, f64::min) - p.eta;
    let hi = p.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + p.eta;
    let steps = resolution.max(2);
    let mut best = (f64::NAN, f64::INFINITY);
    let mut consider = |x: f64| {
        let obj = p.objective(x);
        if obj < best.1 {
            best = (x, obj);
        }
    };
    for i in 0..steps {
        consider(lo + (hi - lo) * i as f64 / (steps - 1) as f64);
    }
    for x in candidates(p) {
        consider(x);
    }
    best
}

/// Baseline identification restrictions for the global parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineMethod {
    /// Weighted mean; the dense stage of averaged debiased estimators.
    Mean,
    /// Lower weighted median.
    Median,
    /// Huber location with shape parameter `lambda`.
    Huber(f64),
    /// `sum w_k (lambda |v_k - x| + (v_k - x)^2 / 2)`.
    MedianRidge(f64),
}

/// One-dimensional baseline location estimate.
pub fn baseline_location(
    method: BaselineMethod,
    values: &[f64],
    weights: &[f64],
) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("baseline_location needs values"));
    }
    if values.len() != weights.len() {
        return Err(Error::dims("values/weights length mismatch".to_string()));
    }
    if values.len() == 1 {
        return Ok(values[0]);
    }
    match method {
        BaselineMethod::Mean => {
            let mass: f64 = weights.iter().sum();
            Ok(values
                .iter()
                .zip(weights)
                .map(|(&v, &w)| w * v)
                .sum::<f64>()
                / mass)
        }
        BaselineMethod::Median => Ok(weighted_lower_median(values, weights)),
        BaselineMethod::Huber(lambda) => {
            if !(lambda > 0.0) {
                return Err(Error::invalid("huber lambda must be > 0"));
            }
            Ok(huber_location(values, weights, lambda))
        }
        BaselineMethod::MedianRidge(lambda) => {
            if !(lambda > 0.0) {
                return Err(Error::invalid("median-ridge lambda must be > 0"));
            }
            Ok(median_ridge_location(values, weights, lambda))
        }
    }
}

/// Smallest value whose cumulative weight reaches half of the total mass.
fn weighted_lower_median(values: &[f64], weights: &[f64]) -> f64 {
    let order = sorted_order(values);
    let total: f64 = weights.iter().sum();
    let mut cum = 0.0;
    for &k in &order {
        cum += weights[k];
        if cum >= 0.5 * total {
            return values[k];
        }
    }
    values[*order.last().unwrap()]
}

/// Unique minimizer of `sum_k w_k L_lambda(x - v_k)` where `L` is the Huber
/// loss, by scanning the piecewise-linear stationarity equation over the
/// sorted breakpoints `v_k ± lambda`.
fn huber_location(values: &[f64], weights: &[f64], lambda: f64) -> f64 {
    // psi'(x - v) = clamp(x - v, -lambda, lambda), weighted.
    let deriv = |x: f64| -> f64 {
        values
            .iter()
            .zip(weights)
            .map(|(&v, &w)| w * (x - v).clamp(-lambda, lambda))
            .sum()
    };
    let mut bps: Vec<f64> = values
        .iter()
        .flat_map(|&v| [v - lambda, v + lambda])
        .collect();
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // f' is nondecreasing, negative at -inf and positive at +inf.
    let mut prev = bps[0];
    if deriv(prev) >= 0.0 {
        // Zero crossing lies below the first breakpoint, where all points
        // are in the linear branch; derivative is constant, so the crossing
        // is at the breakpoint itself.
        return prev;
    }
    for &b in &bps[1..] {
        let db = deriv(b);
        if db >= 0.0 {
            // Crossing inside (prev, b]; f' is affine there.
            let dp = deriv(prev);
            let slope = (db - dp) / (b - prev);
            return if slope > 0.0 { prev - dp / slope } else { b };
        }
        prev = b;
    }
    *bps.last().unwrap()
}

/// Unique minimizer of `sum_k w_k (lambda |v_k - x| + (v_k - x)^2 / 2)` by
/// sorted-subgradient search: the smooth part has slope `total mass`
/// everywhere, so the subgradient is strictly increasing with jumps at each
/// distinct value.
fn median_ridge_location(values: &[f64], weights: &[f64], lambda: f64) -> f64 {
    let order = sorted_order(values);
    let total_w: f64 = weights.iter().sum();
    let total_wv: f64 = values.iter().zip(weights).map(|(&v, &w)| w * v).sum();

    // Between values, g(x) = lambda * (W_below - W_above) + x * W - sum(w v).
    let mut w_below = 0.0;
    let mut pos = 0;
    while pos < order.len() {
        let v = values[order[pos]];
        // Group duplicates so the subgradient jump at v is handled once.
        let mut w_at = 0.0;
        while pos < order.len() && values[order[pos]] == v {
            w_at += weights[order[pos]];
            pos += 1;
        }
        let g_minus = lambda * (w_below - (total_w - w_below)) + v * total_w - total_wv;
        if g_minus > 0.0 {
            // Crossing lies strictly below v, in the previous open interval.
            return (total_wv - lambda * (2.0 * w_below - total_w)) / total_w;
        }
        let w_above = total_w - w_below - w_at;
        let g_plus = lambda * ((w_below + w_at) - w_above) + v * total_w - total_wv;
        if g_plus >= 0.0 {
            return v;
        }
        w_below += w_at;
    }
    // Unreachable for positive weights: g(max v +) = lambda * W + max v * W
    // - sum(w v) > 0.
    values[*order.last().unwrap()]
}

/// Report from checking the cluster conditions under which the redescending
/// objective has a unique minimizer equal to the weighted inlier mean.
#[derive(Debug, Clone)]
pub struct ClusterReport {
    pub holds: bool,
    /// Original indices of the accepted inlier window (sorted by value).
    pub inliers: Vec<usize>,
    /// Weighted mean of the inliers.
    pub mu: f64,
    /// Half-span: largest distance from an inlier to `mu`.
    pub delta: f64,
    /// Smallest gap between an inlier and an outlier (infinite if none).
    pub delta2: f64,
    pub messages: Vec<String>,
}

/// Searches contiguous sorted windows for an inlier set carrying weight mass
/// at least `(1 - alpha) * total` such that:
///
/// 1. no value falls in the forbidden annuli
///    `[mu - 5 delta, mu - delta) U (mu + delta, mu + 5 delta]`, and
/// 2. `2 delta < eta < delta2 / 2` strictly.
///
/// Among satisfying windows the one with the largest mass (then smallest
/// `delta`) is reported. When none satisfies, the report carries the
/// best-mass window's failure messages.
pub fn check_cluster_assumption(
    values: &[f64],
    weights: &[f64],
    eta: f64,
    alpha_bound: f64,
) -> Result<ClusterReport> {
    if values.is_empty() {
        return Err(Error::invalid("cluster check needs values"));
    }
    if values.len() != weights.len() {
        return Err(Error::dims("values/weights length mismatch".to_string()));
    }
    if !(eta > 0.0) {
        return Err(Error::invalid("eta must be > 0"));
    }

    let order = sorted_order(values);
    let sorted: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let w_sorted: Vec<f64> = order.iter().map(|&k| weights[k]).collect();
    let m = sorted.len();
    let total: f64 = w_sorted.iter().sum();
    let needed = (1.0 - alpha_bound) * total;

    let mut pw = vec![0.0; m + 1];
    let mut pwv = vec![0.0; m + 1];
    for i in 0..m {
        pw[i + 1] = pw[i] + w_sorted[i];
        pwv[i + 1] = pwv[i] + w_sorted[i] * sorted[i];
    }

    struct Candidate {
        lo: usize,
        hi: usize,
        mass: f64,
        mu: f64,
        delta: f64,
        delta2: f64,
        failures: Vec<String>,
    }

    let mut best_ok: Option<Candidate> = None;
    let mut best_failed: Option<Candidate> = None;

    for lo in 0..m {
        for hi in lo..m {
            let (mu, mass) = window_mean(&pw, &pwv, lo, hi);
            if mass < needed {
                continue;
            }
            let delta = (mu - sorted[lo]).abs().max((sorted[hi] - mu).abs());
            let mut delta2 = f64::INFINITY;
            for (i, &v) in sorted.iter().enumerate() {
                if i >= lo && i <= hi {
                    continue;
                }
                for &u in &sorted[lo..=hi] {
                    delta2 = delta2.min((v - u).abs());
                }
            }

            let mut failures = Vec::new();
            for &v in &sorted {
                let dist = v - mu;
                let in_left = dist >= -5.0 * delta && dist < -delta;
                let in_right = dist > delta && dist <= 5.0 * delta;
                if in_left || in_right {
                    failures.push(format!(
                        "forbidden annulus occupied: value {v} lies within \
                         (delta, 5*delta] of mu = {mu}"
                    ));
                    break;
                }
            }
            if eta <= 2.0 * delta {
                failures.push(format!(
                    "eta must exceed 2*delta strictly (eta = {eta}, 2*delta = {})",
                    2.0 * delta
                ));
            }
            if eta >= delta2 / 2.0 {
                failures.push(format!(
                    "eta must be below delta2/2 strictly (eta = {eta}, delta2/2 = {})",
                    delta2 / 2.0
                ));
            }

            let cand = Candidate {
                lo,
                hi,
                mass,
                mu,
                delta,
                delta2,
                failures,
            };
            if cand.failures.is_empty() {
                let better = match &best_ok {
                    None => true,
                    Some(b) => {
                        cand.mass > b.mass + 1e-12
                            || ((cand.mass - b.mass).abs() <= 1e-12 && cand.delta < b.delta)
                    }
                };
                if better {
                    best_ok = Some(cand);
                }
            } else {
                let better = match &best_failed {
                    None => true,
                    Some(b) => cand.mass > b.mass,
                };
                if better {
                    best_failed = Some(cand);
                }
            }
        }
    }

    if let Some(c) = best_ok {
        return Ok(ClusterReport {
            holds: true,
            inliers: {
                let mut ids: Vec<usize> = order[c.lo..=c.hi].to_vec();
                ids.sort_unstable();
                ids
            },
            mu: c.mu,
            delta: c.delta,
            delta2: c.delta2,
            messages: Vec::new(),
        });
    }
    let c = best_failed.expect("full window always meets the mass requirement");
    Ok(ClusterReport {
        holds: false,
        inliers: {
            let mut ids: Vec<usize> = order[c.lo..=c.hi].to_vec();
            ids.sort_unstable();
            ids
        },
        mu: c.mu,
        delta: c.delta,
        delta2: c.delta2,
        messages: c.failures,
    })
}

/// Coordinate-wise redescending aggregation of per-node summaries.
pub fn aggregate_vector(summaries: &[LocalSummary], spec: &AggregationSpec) -> Result<Vec<f64>> {
    if summaries.is_empty() {
        return Err(Error::invalid("aggregate_vector needs summaries"));
    }
    let d = summaries[0].debiased_coef.len();
    if summaries.iter().any(|s| s.debiased_coef.len() != d) {
        return Err(Error::dims(
            "summaries disagree on coefficient dimension".to_string(),
        ));
    }
    if spec.eta.len() != d {
        return Err(Error::dims(format!(
            "eta length {} vs dimension {d}",
            spec.eta.len()
        )));
    }
    let weights: Vec<f64> = match spec.weighting {
        Weighting::Uniform => vec![1.0; summaries.len()],
        Weighting::SampleSize => summaries.iter().map(|s| s.sample_size as f64).collect(),
    };

    let mut out = vec![0.0; d];
    for (j, slot) in out.iter_mut().enumerate() {
        let p = LocationProblem {
            values: summaries.iter().map(|s| s.debiased_coef[j]).collect(),
            weights: weights.clone(),
            eta: spec.eta[j],
        };
        *slot = aggregate_location(&p)?.minimizer;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, StreamRng};

    fn uniform(values: &[f64], eta: f64) -> LocationProblem {
        LocationProblem::uniform(values.to_vec(), eta)
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(0.0, 5.0).unwrap(), 0.0);
        assert_eq!(psi(3.0, 5.0).unwrap(), 9.0);
        assert_eq!(psi(10.0, 5.0).unwrap(), 25.0);
        assert!(psi(1.0, 0.0).is_err());
    }

    #[test]
    fn majority_value_wins() {
        let sol = aggregate_location(&uniform(&[0.0, 0.0, 0.0, 0.0, 10.0], 1.0)).unwrap();
        assert_eq!(sol.minimizer, 0.0);
        assert!((sol.objective - 1.0).abs() < 1e-15);
        assert_eq!(sol.inlier_set, vec![0, 1, 2, 3]);
        assert!(sol.unique);
    }

    #[test]
    fn large_eta_reduces_to_mean() {
        let sol = aggregate_location(&uniform(&[1.0, 2.0, 3.0], 100.0)).unwrap();
        assert!((sol.minimizer - 2.0).abs() < 1e-12);
    }

    #[test]
    fn inlier_mean_under_cluster_conditions() {
        let p = uniform(&[0.9, 1.0, 1.1, 5.0], 0.5);
        let sol = aggregate_location(&p).unwrap();
        assert!((sol.minimizer - 1.0).abs() < 1e-12);
        let (ox, _oobj) = oracle_grid_min(&p, 5000);
        assert!((ox - 1.0).abs() < 1e-6);
        let report = check_cluster_assumption(&p.values, &p.weights, 0.5, 0.3).unwrap();
        assert!(report.holds);
        assert!((report.mu - 1.0).abs() < 1e-15);
        assert!((report.delta - 0.1).abs() < 1e-12);
        assert!((report.delta2 - 3.9).abs() < 1e-12);
        assert_eq!(report.inliers, sol.inlier_set);
    }

    #[test]
    fn weighted_mean_with_no_outliers() {
        let p = LocationProblem {
            values: vec![1.0, 3.0],
            weights: vec![3.0, 1.0],
            eta: 100.0,
        };
        let sol = aggregate_location(&p).unwrap();
        assert!((sol.minimizer - 1.5).abs() < 1e-12);
    }

    #[test]
    fn single_value_short_circuits() {
        let sol = aggregate_location(&uniform(&[4.2], 1.0)).unwrap();
        assert_eq!(sol.minimizer, 4.2);
        assert_eq!(sol.objective, 0.0);
        let (ox, oobj) = oracle_grid_min(&uniform(&[4.2], 1.0), 1000);
        assert!((ox - 4.2).abs() < 1e-9);
        assert!(oobj >= -1e-15);
    }

    #[test]
    fn empty_values_rejected() {
        assert!(aggregate_location(&uniform(&[], 1.0)).is_err());
    }

    #[test]
    fn oracle_never_beats_aggregate() {
        let mut rng = StreamRng::new(2024, 0, Purpose::Misc);
        for _ in 0..300 {
            let m = 1 + rng.next_index(50);
            let values: Vec<f64> = (0..m).map(|_| -10.0 + 20.0 * rng.next_f64()).collect();
            let weights: Vec<f64> = (0..m).map(|_| 0.5 + 4.5 * rng.next_f64()).collect();
            let eta = 0.1 + 19.9 * rng.next_f64();
            let p = LocationProblem {
                values,
                weights,
                eta,
            };
            let sol = aggregate_location(&p).unwrap();
            let (_, oobj) = oracle_grid_min(&p, 1000);
            assert!(
                sol.objective <= oobj + 1e-9,
                "aggregate {} vs oracle {oobj}",
                sol.objective
            );
        }
    }

    #[test]
    fn translation_equivariance() {
        let mut rng = StreamRng::new(7, 0, Purpose::Misc);
        for _ in 0..50 {
            let m = 2 + rng.next_index(20);
            let values: Vec<f64> = (0..m).map(|_| -5.0 + 10.0 * rng.next_f64()).collect();
            let eta = 0.2 + 3.0 * rng.next_f64();
            let a = -4.0 + 8.0 * rng.next_f64();
            let base = aggregate_location(&uniform(&values, eta)).unwrap();
            let shifted: Vec<f64> = values.iter().map(|v| v + a).collect();
            let moved = aggregate_location(&uniform(&shifted, eta)).unwrap();
            assert!(
                (moved.minimizer - (base.minimizer + a)).abs() <= 1e-12 * (1.0 + a.abs()),
                "shift {a}: {} vs {}",
                moved.minimizer,
                base.minimizer + a
            );
        }
    }

    #[test]
    fn positive_scale_equivariance() {
        let mut rng = StreamRng::new(8, 0, Purpose::Misc);
        for _ in 0..50 {
            let m = 2 + rng.next_index(20);
            let values: Vec<f64> = (0..m).map(|_| -5.0 + 10.0 * rng.next_f64()).collect();
            let eta = 0.2 + 3.0 * rng.next_f64();
            let c = 0.1 + 5.0 * rng.next_f64();
            let base = aggregate_location(&uniform(&values, eta)).unwrap();
            let scaled: Vec<f64> = values.iter().map(|v| c * v).collect();
            let out = aggregate_location(&uniform(&scaled, c * eta)).unwrap();
            assert!(
                (out.minimizer - c * base.minimizer).abs() <= 1e-10 * (1.0 + c),
                "scale {c}: {} vs {}",
                out.minimizer,
                c * base.minimizer
            );
        }
    }

    #[test]
    fn constant_weights_match_unit_weights() {
        let values = vec![0.3, 0.5, 0.4, 7.0, 0.45];
        let unit = aggregate_location(&uniform(&values, 0.6)).unwrap();
        let scaled = aggregate_location(&LocationProblem {
            values: values.clone(),
            weights: vec![3.7; values.len()],
            eta: 0.6,
        })
        .unwrap();
        assert!((unit.minimizer - scaled.minimizer).abs() < 1e-12);
        assert_eq!(unit.inlier_set, scaled.inlier_set);
    }

    #[test]
    fn cluster_exactness_randomized() {
        let mut rng = StreamRng::new(99, 0, Purpose::Misc);
        let mut holds_seen = 0;
        for trial in 0..400 {
            let m_in = 3 + rng.next_index(10);
            let m_out = rng.next_index(3);
            let center = -3.0 + 6.0 * rng.next_f64();
            let spread = 0.05 + 0.2 * rng.next_f64();
            let mut values: Vec<f64> = (0..m_in)
                .map(|_| center + spread * (2.0 * rng.next_f64() - 1.0))
                .collect();
            for _ in 0..m_out {
                let side = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
                values.push(center + side * (8.0 + 4.0 * rng.next_f64()));
            }
            let weights: Vec<f64> = (0..values.len()).map(|_| 1.0 + rng.next_index(5) as f64).collect();
            let eta = 1.0;
            let report =
                check_cluster_assumption(&values, &weights, eta, 3.0 / 7.0 - 1e-9).unwrap();
            if !report.holds {
                continue;
            }
            holds_seen += 1;
            let sol = aggregate_location(&LocationProblem {
                values: values.clone(),
                weights: weights.clone(),
                eta,
            })
            .unwrap();
            assert!(
                (sol.minimizer - report.mu).abs() <= 1e-12,
                "trial {trial}: {} vs mu {}",
                sol.minimizer,
                report.mu
            );
            assert_eq!(sol.inlier_set, report.inliers, "trial {trial}");
        }
        assert!(holds_seen > 100, "only {holds_seen} cluster configs held");
    }

    #[test]
    fn large_eta_exact_weighted_mean() {
        let values = vec![-2.0, 0.5, 3.0, 1.0];
        let weights = vec![1.0, 2.0, 1.5, 1.0];
        let span = 5.0;
        let p = LocationProblem {
            values: values.clone(),
            weights: weights.clone(),
            eta: span,
        };
        let sol = aggregate_location(&p).unwrap();
        let mean = values
            .iter()
            .zip(&weights)
            .map(|(&v, &w)| v * w)
            .sum::<f64>()
            / weights.iter().sum::<f64>();
        assert_eq!(sol.minimizer, mean);
    }

    #[test]
    fn baseline_mean_median() {
        let v = vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0];
        let w = vec![1.0; 7];
        assert_eq!(
            baseline_location(BaselineMethod::Median, &v, &w).unwrap(),
            8.0
        );
        assert!(
            (baseline_location(BaselineMethod::Mean, &v, &w).unwrap() - 8.0).abs() < 1e-12
        );
        // Lower median on even mass.
        let v = vec![1.0, 2.0, 3.0, 4.0];
        let w = vec![1.0; 4];
        assert_eq!(
            baseline_location(BaselineMethod::Median, &v, &w).unwrap(),
            2.0
        );
    }

    #[test]
    fn huber_is_never_zero_on_contaminated_zeros() {
        let mut v = vec![0.0; 9];
        v.push(10.0);
        let w = vec![1.0; 10];
        let x = baseline_location(BaselineMethod::Huber(1.0), &v, &w).unwrap();
        assert!((x - 1.0 / 9.0).abs() < 1e-10, "stationarity 9x = 1, got {x}");

        // Log-grid sweep: the minimizer never lands on zero.
        for i in 0..50 {
            let lambda = 1e-3 * (1e6f64).powf(i as f64 / 49.0);
            let x = baseline_location(BaselineMethod::Huber(lambda), &v, &w).unwrap();
            assert!(x.abs() > 1e-9, "lambda {lambda} gave {x}");
        }

        // The redescending aggregate ignores the outlier completely.
        let sol = aggregate_location(&uniform(&v, 1.0)).unwrap();
        assert_eq!(sol.minimizer, 0.0);
    }

    #[test]
    fn median_ridge_examples() {
        let mut v = vec![0.0; 9];
        v.push(10.0);
        let w = vec![1.0; 10];
        let x = baseline_location(BaselineMethod::MedianRidge(0.5), &v, &w).unwrap();
        assert!((x - 0.6).abs() < 1e-12, "expected 0.6, got {x}");
        // Distance to the mean (1.0) stays within lambda.
        assert!((x - 1.0).abs() <= 0.5 + 1e-12);
    }

    #[test]
    fn median_ridge_stays_within_lambda_of_mean() {
        let mut rng = StreamRng::new(55, 0, Purpose::Misc);
        for _ in 0..100 {
            let m = 2 + rng.next_index(20);
            let values: Vec<f64> = (0..m).map(|_| -10.0 + 20.0 * rng.next_f64()).collect();
            let weights: Vec<f64> = (0..m).map(|_| 0.5 + 2.0 * rng.next_f64()).collect();
            let lambda = 0.05 + 2.0 * rng.next_f64();
            let x =
                baseline_location(BaselineMethod::MedianRidge(lambda), &values, &weights)
                    .unwrap();
            let mean = values
                .iter()
                .zip(&weights)
                .map(|(&v, &w)| v * w)
                .sum::<f64>()
                / weights.iter().sum::<f64>();
            assert!(
                (x - mean).abs() <= lambda + 1e-12,
                "|{x} - {mean}| > {lambda}"
            );
        }
    }

    #[test]
    fn cluster_check_rejects_equally_spaced_values() {
        let values: Vec<f64> = (0..8).map(|k| 0.5 * k as f64).collect();
        let weights = vec![1.0; 8];
        let report = check_cluster_assumption(&values, &weights, 0.4, 0.3).unwrap();
        assert!(!report.holds);
        assert!(
            report.messages.iter().any(|m| m.contains("annulus")
                || m.contains("2*delta")
                || m.contains("delta2/2")),
            "messages: {:?}",
            report.messages
        );
    }

    #[test]
    fn eta_boundary_is_strict() {
        // Inliers {0.9, 1.1} with mu = 1.0, delta = 0.1; eta = 2*delta fails.
        let values = vec![0.9, 1.1, 9.0];
        let weights = vec![1.0; 3];
        let report = check_cluster_assumption(&values, &weights, 0.2, 0.4).unwrap();
        assert!(!report.holds);
        assert!(
            report
                .messages
                .iter()
                .any(|m| m.contains("must exceed 2*delta strictly")),
            "messages: {:?}",
            report.messages
        );
        // Slightly larger eta satisfies it.
        let report = check_cluster_assumption(&values, &weights, 0.25, 0.4).unwrap();
        assert!(report.holds);
        assert_eq!(report.inliers, vec![0, 1]);
    }

    #[test]
    fn aggregate_vector_single_node_and_mean_reduction() {
        let s1 = LocalSummary {
            lasso_coef: vec![1.0, 2.0],
            debiased_coef: vec![1.1, 2.2],
            sample_size: 50,
            noise_sd: 0.1,
        };
        let spec = AggregationSpec::constant_eta(2, 5.0);
        let out = aggregate_vector(std::slice::from_ref(&s1), &spec).unwrap();
        assert_eq!(out, vec![1.1, 2.2]);

        let s2 = LocalSummary {
            debiased_coef: vec![1.3, 2.0],
            ..s1.clone()
        };
        let spec = AggregationSpec::constant_eta(2, 1e6);
        let out = aggregate_vector(&[s1, s2], &spec).unwrap();
        assert!((out[0] - 1.2).abs() < 1e-12);
        assert!((out[1] - 2.1).abs() < 1e-12);
    }
}
