//! Config-driven experiment sweeps emitting CSV.
//!
//! A plan sweeps the per-node sample size (fixed machine count) or the
//! machine count (fixed sample size), runs every requested estimator on the
//! same per-node fits, and records error norms of the dense and thresholded
//! global estimates against the generating truth. Detail rows carry one
//! (sweep point, replication, estimator, variant) each; summary rows carry
//! 5%/50%/95% quantiles over replications.

use rayon::prelude::*;
use std::time::Instant;

use intlasso::aggregate::{aggregate_vector, baseline_location, BaselineMethod};
use intlasso::datagen::{gen_scenario, Scenario, ScenarioKind};
use intlasso::metrics::{norm_errors, support_metrics, ErrorReport};
use intlasso::model::{ThresholdMode, Weighting};
use intlasso::pipeline::{resolve_thresholds, PipelineConfig};
use intlasso::rng::StreamRng;
use intlasso::simnet::{comm_bytes, execute_round};
use intlasso::threshold::apply_threshold;

use crate::config::KvFile;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Growing per-node sample size at fixed machine count.
    N { m: usize },
    /// Growing machine count at fixed per-node sample size.
    M { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Redescending,
    RedescendingWeighted,
    Adele,
    Median,
}

impl Estimator {
    fn name(self) -> &'static str {
        match self {
            Estimator::Redescending => "redescending",
            Estimator::RedescendingWeighted => "redescending_weighted",
            Estimator::Adele => "adele",
            Estimator::Median => "median",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Dense,
    Hard,
    Soft,
    DeltaDense,
    DeltaThresholded,
}

impl Variant {
    fn name(self) -> &'static str {
        match self {
            Variant::Dense => "dense",
            Variant::Hard => "hard",
            Variant::Soft => "soft",
            Variant::DeltaDense => "delta_dense",
            Variant::DeltaThresholded => "delta_thresholded",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub sweep: Sweep,
    pub values: Vec<usize>,
    pub d: usize,
    pub sigma: f64,
    pub eta: f64,
    pub replications: usize,
    pub estimators: Vec<Estimator>,
    pub variants: Vec<Variant>,
    pub lambda_constant: f64,
    pub nodewise_constant: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn from_config(kv: &KvFile) -> Result<Self, CliError> {
        let sweep = match kv.require("sweep")? {
            "n" => Sweep::N {
                m: kv.get_usize("m", 10)?,
            },
            "m" => Sweep::M {
                n: kv.get_usize("n", 100)?,
            },
            other => {
                return Err(CliError::validation(format!(
                    "sweep must be 'n' or 'm', got '{other}'"
                )))
            }
        };
        let values = kv
            .get_usize_list("values")?
            .ok_or_else(|| CliError::validation("values required".to_string()))?;
        if values.is_empty() {
            return Err(CliError::validation("values must be nonempty".to_string()));
        }
        let replications = kv.get_usize("replications", 1)?;
        if replications < 1 {
            return Err(CliError::validation("replications must be >= 1".to_string()));
        }

        let estimators = match kv.get("estimators") {
            None => vec![Estimator::Redescending],
            Some(s) => s
                .split(',')
                .map(|tok| match tok.trim() {
                    "redescending" => Ok(Estimator::Redescending),
                    "redescending_weighted" => Ok(Estimator::RedescendingWeighted),
                    "adele" => Ok(Estimator::Adele),
                    "median" => Ok(Estimator::Median),
                    other => Err(CliError::validation(format!("unknown estimator '{other}'"))),
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        let variants = match kv.get("variants") {
            None => vec![Variant::Dense, Variant::Hard, Variant::Soft],
            Some(s) => s
                .split(',')
                .map(|tok| match tok.trim() {
                    "dense" => Ok(Variant::Dense),
                    "hard" => Ok(Variant::Hard),
                    "soft" => Ok(Variant::Soft),
                    "delta_dense" => Ok(Variant::DeltaDense),
                    "delta_thresholded" => Ok(Variant::DeltaThresholded),
                    other => Err(CliError::validation(format!("unknown variant '{other}'"))),
                })
                .collect::<Result<Vec<_>, _>>()?,
        };

        let plan = ExperimentPlan {
            sweep,
            values,
            d: kv.get_usize("d", 500)?,
            sigma: kv.get_f64("sigma", 0.05)?,
            eta: kv.get_f64("eta", 5.0)?,
            replications,
            estimators,
            variants,
            lambda_constant: kv.get_f64("lambda_constant", 1.0)?,
            nodewise_constant: kv.get_f64("nodewise_constant", 0.25)?,
            alpha: kv.get_f64("alpha", 0.0)?,
            seed: kv.get_u64("seed", 0)?,
        };
        kv.reject_unknown()?;
        Ok(plan)
    }

    fn config(&self, weighting: Weighting) -> PipelineConfig {
        let mut cfg = PipelineConfig::squared(self.d, self.eta);
        cfg.lambda_constant = self.lambda_constant;
        cfg.nodewise_constant = self.nodewise_constant;
        cfg.spec.alpha_bound = self.alpha;
        cfg.spec.weighting = weighting;
        cfg.seed = self.seed;
        cfg
    }
}

#[derive(Debug, Clone)]
pub struct DetailRow {
    pub sweep_param: &'static str,
    pub value: usize,
    pub rep: usize,
    pub estimator: &'static str,
    pub variant: &'static str,
    pub errors: ErrorReport,
    pub support_recovered: bool,
    pub comm_bytes: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub sweep_param: &'static str,
    pub value: usize,
    pub estimator: &'static str,
    pub variant: &'static str,
    /// (q05, q50, q95) for l1, l2, linf.
    pub quantiles: [[f64; 3]; 3],
}

/// Linear-interpolation quantile on a sorted copy.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut xs = values.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if xs.len() == 1 {
        return xs[0];
    }
    let pos = q * (xs.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(xs.len() - 1);
    let frac = pos - lo as f64;
    xs[lo] + frac * (xs[hi] - xs[lo])
}

pub fn run_experiment(plan: &ExperimentPlan) -> Result<(Vec<DetailRow>, Vec<SummaryRow>), CliError> {
    let sweep_param = match plan.sweep {
        Sweep::N { .. } => "n",
        Sweep::M { .. } => "m",
    };

    let points: Vec<(usize, usize)> = plan
        .values
        .iter()
        .enumerate()
        .flat_map(|(vi, _)| (0..plan.replications).map(move |rep| (vi, rep)))
        .collect();

    let per_run: Result<Vec<Vec<DetailRow>>, CliError> = points
        .par_iter()
        .map(|&(vi, rep)| run_point(plan, sweep_param, vi, rep))
        .collect();
    let detail: Vec<DetailRow> = per_run?.into_iter().flatten().collect();

    let mut summary = Vec::new();
    for &value in &plan.values {
        for est in &plan.estimators {
            for var in &plan.variants {
                let rows: Vec<&DetailRow> = detail
                    .iter()
                    .filter(|r| {
                        r.value == value
                            && r.estimator == est.name()
                            && r.variant == var.name()
                    })
                    .collect();
                if rows.is_empty() {
                    continue;
                }
                let pick = |f: fn(&ErrorReport) -> f64| -> [f64; 3] {
                    let xs: Vec<f64> = rows.iter().map(|r| f(&r.errors)).collect();
                    [
                        quantile(&xs, 0.05),
                        quantile(&xs, 0.50),
                        quantile(&xs, 0.95),
                    ]
                };
                summary.push(SummaryRow {
                    sweep_param,
                    value,
                    estimator: est.name(),
                    variant: var.name(),
                    quantiles: [
                        pick(|e| e.l1),
                        pick(|e| e.l2),
                        pick(|e| e.linf),
                    ],
                });
            }
        }
    }
    Ok((detail, summary))
}

fn run_point(
    plan: &ExperimentPlan,
    sweep_param: &'static str,
    vi: usize,
    rep: usize,
) -> Result<Vec<DetailRow>, CliError> {
    let value = plan.values[vi];
    let (kind, m, n) = match plan.sweep {
        Sweep::N { m } => (ScenarioKind::GrowN, m, value),
        Sweep::M { n } => (ScenarioKind::GrowM, value, n),
    };
    let seed = StreamRng::derive(plan.seed, &[vi as u64, rep as u64]);
    let sc = Scenario::uniform(kind, m, n, plan.d, seed).with_noise_sd(plan.sigma);
    let (datasets, truth, _) = gen_scenario(&sc).map_err(CliError::from_core)?;

    let start = Instant::now();
    let base_cfg = plan.config(Weighting::Uniform);
    let round = execute_round(&datasets, &base_cfg).map_err(CliError::from_core)?;
    let bytes = comm_bytes(&round.log);

    let mut rows = Vec::new();
    for est in &plan.estimators {
        let weighting = match est {
            Estimator::RedescendingWeighted => Weighting::SampleSize,
            _ => Weighting::Uniform,
        };
        let cfg = plan.config(weighting);
        let dense: Vec<f64> = match est {
            Estimator::Redescending | Estimator::RedescendingWeighted => {
                aggregate_vector(&round.summaries, &cfg.spec).map_err(CliError::from_core)?
            }
            Estimator::Adele | Estimator::Median => {
                let method = if *est == Estimator::Adele {
                    BaselineMethod::Mean
                } else {
                    BaselineMethod::Median
                };
                let weights: Vec<f64> = match weighting {
                    Weighting::Uniform => vec![1.0; m],
                    Weighting::SampleSize => round
                        .summaries
                        .iter()
                        .map(|s| s.sample_size as f64)
                        .collect(),
                };
                let mut out = vec![0.0; plan.d];
                for (j, slot) in out.iter_mut().enumerate() {
                    let values: Vec<f64> =
                        round.summaries.iter().map(|s| s.debiased_coef[j]).collect();
                    *slot =
                        baseline_location(method, &values, &weights).map_err(CliError::from_core)?;
                }
                out
            }
        };
        let thresholds =
            resolve_thresholds(&round.summaries, &cfg, plan.d).map_err(CliError::from_core)?;
        let seconds = start.elapsed().as_secs_f64();

        for var in &plan.variants {
            let (errors, recovered) = match var {
                Variant::Dense | Variant::Hard | Variant::Soft => {
                    let vec = match var {
                        Variant::Dense => dense.clone(),
                        Variant::Hard => {
                            apply_threshold(&dense, thresholds.global_level, ThresholdMode::Hard)
                                .map_err(CliError::from_core)?
                        }
                        _ => apply_threshold(
                            &dense,
                            thresholds.global_level,
                            ThresholdMode::Soft,
                        )
                        .map_err(CliError::from_core)?,
                    };
                    let errors =
                        norm_errors(&vec, &truth.global_coef).map_err(CliError::from_core)?;
                    let recovered = support_metrics(&vec, &truth.global_coef, 1e-10)
                        .map_err(CliError::from_core)?
                        .recovered;
                    (errors, recovered)
                }
                Variant::DeltaDense | Variant::DeltaThresholded => {
                    let mut acc = ErrorReport {
                        l1: 0.0,
                        l2: 0.0,
                        linf: 0.0,
                    };
                    let mut recovered = true;
                    for (k, s) in round.summaries.iter().enumerate() {
                        let delta: Vec<f64> = s
                            .debiased_coef
                            .iter()
                            .zip(&dense)
                            .map(|(&a, &b)| a - b)
                            .collect();
                        let vec = if *var == Variant::DeltaDense {
                            delta
                        } else {
                            apply_threshold(
                                &delta,
                                thresholds.local_levels[k],
                                ThresholdMode::Hard,
                            )
                            .map_err(CliError::from_core)?
                        };
                        let e = norm_errors(&vec, &truth.local_deltas[k])
                            .map_err(CliError::from_core)?;
                        acc.l1 += e.l1;
                        acc.l2 += e.l2;
                        acc.linf += e.linf;
                        recovered &= support_metrics(&vec, &truth.local_deltas[k], 1e-10)
                            .map_err(CliError::from_core)?
                            .recovered;
                    }
                    let inv = 1.0 / m as f64;
                    acc.l1 *= inv;
                    acc.l2 *= inv;
                    acc.linf *= inv;
                    (acc, recovered)
                }
            };
            rows.push(DetailRow {
                sweep_param,
                value,
                rep,
                estimator: est.name(),
                variant: var.name(),
                errors,
                support_recovered: recovered,
                comm_bytes: bytes,
                seconds,
            });
        }
    }
    Ok(rows)
}

pub const DETAIL_HEADER: &str =
    "sweep_param,value,rep,estimator,variant,l1,l2,linf,support_recovered,comm_bytes,seconds";
pub const SUMMARY_HEADER: &str = "sweep_param,value,estimator,variant,l1_q05,l1_q50,l1_q95,l2_q05,l2_q50,l2_q95,linf_q05,linf_q50,linf_q95";

/// One file, two sections: detail rows under [`DETAIL_HEADER`], then summary
/// rows under [`SUMMARY_HEADER`]. Column count is constant within each
/// section.
pub fn to_csv(detail: &[DetailRow], summary: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(DETAIL_HEADER);
    out.push('\n');
    for r in detail {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.sweep_param,
            r.value,
            r.rep,
            r.estimator,
            r.variant,
            r.errors.l1,
            r.errors.l2,
            r.errors.linf,
            if r.support_recovered { 1 } else { 0 },
            r.comm_bytes,
            r.seconds,
        ));
    }
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in summary {
        let q = &r.quantiles;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.sweep_param,
            r.value,
            r.estimator,
            r.variant,
            q[0][0],
            q[0][1],
            q[0][2],
            q[1][0],
            q[1][1],
            q[1][2],
            q[2][0],
            q[2][1],
            q[2][2],
        ));
    }
    out
}
