//! Hard and soft thresholding of dense estimates, and rate-based default
//! levels for the global aggregate and the per-node deltas.

use crate::error::{Error, Result};
use crate::model::{ThresholdMode, ThresholdSpec, Weighting};

/// Coordinate-wise thresholding at level `t >= 0`.
///
/// Hard keeps `v_j` when `|v_j| >= t` (boundary kept); soft shrinks
/// magnitudes by `t` and clips at zero.
pub fn apply_threshold(v: &[f64], t: f64, mode: ThresholdMode) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(Error::invalid(format!("threshold must be >= 0, got {t}")));
    }
    Ok(v.iter()
        .map(|&x| match mode {
            ThresholdMode::Hard => {
                if x.abs() >= t {
                    x
                } else {
                    0.0
                }
            }
            ThresholdMode::Soft => x.signum() * (x.abs() - t).max(0.0),
        })
        .collect())
}

/// Default threshold levels.
///
/// Global level: `4 * noise_sd * sqrt(log d / ((1 - alpha_max) * N))` where
/// `N = m * min_k n_k` under uniform weighting and `N = sum_k n_k` under
/// sample-size weighting (always at least as large, hence a level at least
/// as sharp). Per-node levels: `4 * noise_sd * sqrt(log d / n_k)`.
pub fn default_thresholds(
    m: usize,
    n: &[usize],
    d: usize,
    noise_sd: f64,
    alpha_max: f64,
    weighting: Weighting,
    mode: ThresholdMode,
) -> Result<ThresholdSpec> {
    if n.len() != m {
        return Err(Error::dims(format!("{m} nodes but {} sizes", n.len())));
    }
    if d < 2 {
        return Err(Error::invalid("thresholds need d >= 2".to_string()));
    }
    if n.iter().any(|&nk| nk < 1) {
        return Err(Error::invalid("every n_k must be >= 1".to_string()));
    }
    if !(0.0..1.0).contains(&alpha_max) {
        return Err(Error::invalid(format!(
            "alpha_max must be in [0, 1), got {alpha_max}"
        )));
    }
    if !(noise_sd > 0.0) {
        return Err(Error::invalid("noise_sd must be positive".to_string()));
    }

    let log_d = (d as f64).ln();
    let effective_n = match weighting {
        Weighting::Uniform => (m * n.iter().copied().min().unwrap()) as f64,
        Weighting::SampleSize => n.iter().copied().sum::<usize>() as f64,
    };
    let global_level = 4.0 * noise_sd * (log_d / ((1.0 - alpha_max) * effective_n)).sqrt();
    let local_levels = n
        .iter()
        .map(|&nk| 4.0 * noise_sd * (log_d / nk as f64).sqrt())
        .collect();

    Ok(ThresholdSpec {
        mode,
        global_level,
        local_levels,
    })
}
