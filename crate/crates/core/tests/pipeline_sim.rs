//! Simulation checks of the full pipeline on the synthetic block scenario.

use intlasso::aggregate::{aggregate_location, LocationProblem};
use intlasso::datagen::{gen_scenario, Scenario, ScenarioKind};
use intlasso::pipeline::{fit_node, integrate, run_integrative, GlobalEstimator, PipelineConfig};
use intlasso::rng::StreamRng;
use intlasso::simnet::execute_round;

/// Shared-block support recovery, outlier suppression, and delta detection
/// on the scaled scenario (m = 10, n = 100, d = 500).
#[test]
fn block_scenario_support_and_outlier_behaviour() {
    let d = 500;
    let mut support_ok = 0;
    let mut outlier_ok = 0;
    let mut agg_near_zero = 0;
    let mut mean_near_four = 0;
    let reps = 20u64;
    for rep in 0..reps {
        let seed = StreamRng::derive(771, &[rep]);
        let sc = Scenario::uniform(ScenarioKind::GrowN, 10, 100, d, seed);
        let (datasets, _, eta) = gen_scenario(&sc).unwrap();
        let cfg = PipelineConfig::squared(d, eta);
        let result = run_integrative(&datasets, &cfg).unwrap();

        // The shared block must survive thresholding.
        if (0..5).all(|j| result.thresholded_global[j] != 0.0) {
            support_ok += 1;
        }
        // Contaminated coordinates: zero globally, flagged in node 10's delta.
        let global_zero = result.thresholded_global[10] == 0.0
            && result.thresholded_global[11] == 0.0;
        let delta_flags = result.thresholded_deltas[9][10] != 0.0
            && result.thresholded_deltas[9][11] != 0.0;
        if global_zero && delta_flags {
            outlier_ok += 1;
        }
        // Dense aggregate vs plain mean at a contaminated coordinate.
        if result.dense_global[10].abs() < 0.5 {
            agg_near_zero += 1;
        }
        // Debiased values satisfy value_k = dense_global + delta_k, so their
        // mean is dense_global + mean(delta).
        let mean10 = result.dense_global[10]
            + result.dense_deltas.iter().map(|d| d[10]).sum::<f64>() / 10.0;
        if (mean10 - 4.0).abs() < 1.5 {
            mean_near_four += 1;
        }
    }
    assert!(support_ok >= 18, "shared block recovered in {support_ok}/{reps}");
    assert!(outlier_ok >= 18, "outlier handling correct in {outlier_ok}/{reps}");
    assert!(agg_near_zero >= 18, "aggregate near zero in {agg_near_zero}/{reps}");
    assert!(mean_near_four >= 18, "mean pulled to four in {mean_near_four}/{reps}");
}

/// The message layer is semantically transparent: outputs computed through
/// it are bitwise identical to direct in-memory computation.
#[test]
fn simnet_is_transparent() {
    let sc = Scenario::uniform(ScenarioKind::GrowN, 4, 50, 16, 99);
    let (datasets, _, eta) = gen_scenario(&sc).unwrap();
    let cfg = PipelineConfig::squared(16, eta);

    let through_simnet = run_integrative(&datasets, &cfg).unwrap();

    let mut summaries = Vec::new();
    let mut diagnostics = Vec::new();
    for ds in &datasets {
        let (s, diag) = fit_node(ds, &cfg).unwrap();
        summaries.push(s);
        diagnostics.push(diag);
    }
    let round = execute_round(&datasets, &cfg).unwrap();
    assert_eq!(summaries, round.summaries, "summaries differ across paths");
    let direct = integrate(
        &summaries,
        diagnostics,
        round.log,
        &cfg,
        GlobalEstimator::Redescending,
    )
    .unwrap();

    assert_eq!(direct.dense_global, through_simnet.dense_global);
    assert_eq!(direct.thresholded_global, through_simnet.thresholded_global);
    assert_eq!(direct.dense_deltas, through_simnet.dense_deltas);
    assert_eq!(direct.thresholded_deltas, through_simnet.thresholded_deltas);
}

/// Noiseless limit at a shared coordinate: every machine carries 5, so the
/// aggregate identifies 5 exactly.
#[test]
fn shared_coordinate_identified_exactly() {
    let sc = Scenario::uniform(ScenarioKind::GrowN, 10, 5, 20, 1);
    let (_, truth, eta) = gen_scenario(&sc).unwrap();
    let values: Vec<f64> = truth.local_coefs.iter().map(|c| c[2]).collect();
    assert!(values.iter().all(|&v| v == 5.0));
    let sol = aggregate_location(&LocationProblem::uniform(values, eta)).unwrap();
    assert_eq!(sol.minimizer, 5.0);
    assert_eq!(sol.objective, 0.0);
}
