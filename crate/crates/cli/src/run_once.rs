//! Ad-hoc pipeline invocation on on-disk datasets.

use std::fs;
use std::io::{BufReader, Write};
use std::path::Path;

use intlasso::datagen::read_dataset;
use intlasso::loss::LossKind;
use intlasso::model::{Dataset, ThresholdMode, Weighting};
use intlasso::pipeline::{
    integrate, resolve_thresholds, GlobalEstimator, PipelineConfig, ThresholdOverride,
};
use intlasso::simnet::{execute_round, SummaryMessage};

use crate::config::KvFile;
use crate::CliError;

pub fn parse_pipeline_config(kv: &KvFile, d: usize) -> Result<PipelineConfig, CliError> {
    let eta = kv
        .get_f64_list("eta")?
        .ok_or_else(|| CliError::validation("eta required".to_string()))?;
    let eta = if eta.len() == 1 {
        vec![eta[0]; d]
    } else if eta.len() == d {
        eta
    } else {
        return Err(CliError::validation(format!(
            "eta has {} entries but dimension is {d}",
            eta.len()
        )));
    };

    let loss = match kv.get("loss").unwrap_or("squared") {
        "squared" => LossKind::Squared,
        "logistic" => LossKind::Logistic,
        other => {
            return Err(CliError::validation(format!(
                "loss must be squared or logistic, got '{other}'"
            )))
        }
    };
    let weighting = match kv.get("weighting").unwrap_or("uniform") {
        "uniform" => Weighting::Uniform,
        "sample_size" => Weighting::SampleSize,
        other => {
            return Err(CliError::validation(format!(
                "weighting must be uniform or sample_size, got '{other}'"
            )))
        }
    };
    let threshold_mode = match kv.get("threshold_mode").unwrap_or("hard") {
        "hard" => ThresholdMode::Hard,
        "soft" => ThresholdMode::Soft,
        other => {
            return Err(CliError::validation(format!(
                "threshold_mode must be hard or soft, got '{other}'"
            )))
        }
    };

    let t0 = kv.get_f64("t0", f64::NAN)?;
    let tk = kv.get_f64("tk", f64::NAN)?;
    let threshold_override = match (t0.is_nan(), tk.is_nan()) {
        (true, true) => None,
        (false, false) => Some(ThresholdOverride {
            global_level: t0,
            local_levels: vec![tk],
        }),
        _ => {
            return Err(CliError::validation(
                "t0 and tk must be given together".to_string(),
            ))
        }
    };

    let mut cfg = PipelineConfig::squared(d, 1.0);
    cfg.loss = loss;
    cfg.lambda_constant = kv.get_f64("lambda_constant", 1.0)?;
    cfg.nodewise_constant = kv.get_f64("nodewise_constant", 0.25)?;
    cfg.spec.eta = eta;
    cfg.spec.weighting = weighting;
    cfg.spec.alpha_bound = kv.get_f64("alpha", 0.0)?;
    cfg.threshold_mode = threshold_mode;
    cfg.threshold_override = threshold_override;
    cfg.seed = kv.get_u64("seed", 0)?;
    kv.reject_unknown()?;
    Ok(cfg)
}

pub fn load_datasets(paths: &[String]) -> Result<Vec<Dataset>, CliError> {
    let mut datasets = Vec::with_capacity(paths.len());
    for (k, path) in paths.iter().enumerate() {
        let file = fs::File::open(path)
            .map_err(|e| CliError::io(format!("{path}: {e}")))?;
        let ds = read_dataset(&mut BufReader::new(file), k as u64)
            .map_err(|e| CliError::validation(format!("{path}: {e}")))?;
        datasets.push(ds);
    }
    Ok(datasets)
}

fn write_vector(path: &Path, v: &[f64]) -> Result<(), CliError> {
    let mut out = String::new();
    for x in v {
        out.push_str(&format!("{x}\n"));
    }
    fs::write(path, out).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

pub fn run_once(
    dataset_paths: &[String],
    kv: &KvFile,
    out_dir: &Path,
    dump_messages: bool,
) -> Result<(), CliError> {
    let datasets = load_datasets(dataset_paths)?;
    if datasets.is_empty() {
        return Err(CliError::validation("at least one dataset file required".to_string()));
    }
    let d = datasets[0].dim();
    let cfg = parse_pipeline_config(kv, d)?;

    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::io(format!("{}: {e}", out_dir.display())))?;

    let round = execute_round(&datasets, &cfg).map_err(CliError::from_core)?;
    if dump_messages {
        let msg_dir = out_dir.join("messages");
        fs::create_dir_all(&msg_dir)
            .map_err(|e| CliError::io(format!("{}: {e}", msg_dir.display())))?;
        for (ds, summary) in datasets.iter().zip(&round.summaries) {
            let msg = SummaryMessage::new(ds.node_id, summary.clone());
            let path = msg_dir.join(format!("node_{}.msg", ds.node_id));
            fs::write(&path, msg.to_bytes())
                .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        }
    }

    let thresholds =
        resolve_thresholds(&round.summaries, &cfg, d).map_err(CliError::from_core)?;
    let result = integrate(
        &round.summaries,
        round.diagnostics,
        round.log,
        &cfg,
        GlobalEstimator::Redescending,
    )
    .map_err(CliError::from_core)?;

    write_vector(&out_dir.join("theta_dense.txt"), &result.dense_global)?;
    write_vector(&out_dir.join("theta_hat.txt"), &result.thresholded_global)?;
    for (k, delta) in result.thresholded_deltas.iter().enumerate() {
        write_vector(&out_dir.join(format!("delta_hat_{k}.txt")), delta)?;
    }

    let mut diag = String::new();
    diag.push_str(&format!("threshold_global {}\n", thresholds.global_level));
    diag.push_str(&format!(
        "threshold_mode {}\n",
        match thresholds.mode {
            ThresholdMode::Hard => "hard",
            ThresholdMode::Soft => "soft",
        }
    ));
    diag.push_str(&format!("comm_total_bytes {}\n", result.comm_log.total_bytes));
    diag.push_str(&format!("comm_rounds {}\n", result.comm_log.rounds));
    for (k, nd) in result.diagnostics.iter().enumerate() {
        diag.push_str(&format!(
            "node {} lambda {} sigma_hat {} kkt {} unit_diag_error {} max_coherence {} \
             offdiag_ok {}/{} converged {} threshold_local {}\n",
            nd.node_id,
            nd.lambda,
            nd.sigma_hat,
            nd.kkt_violation,
            nd.coherence.unit_diag_error,
            nd.coherence.max_coherence,
            nd.coherence.offdiag_bound_ok.iter().filter(|&&b| b).count(),
            d,
            nd.fit_converged,
            thresholds.local_levels[k],
        ));
    }
    let diag_path = out_dir.join("diagnostics.txt");
    let mut f = fs::File::create(&diag_path)
        .map_err(|e| CliError::io(format!("{}: {e}", diag_path.display())))?;
    f.write_all(diag.as_bytes())
        .map_err(|e| CliError::io(format!("{}: {e}", diag_path.display())))?;
    Ok(())
}
