//! Synthetic benchmark generator.
//!
//! Designs are trichotomized latent Gaussians: a latent vector `z` whose
//! first `min(100, d)` coordinates follow a stationary AR(1) process with
//! autocorrelation 0.75 and unit marginal variance (remaining coordinates
//! iid standard normal) is mapped to entries in {-1, 0, +1} by cutting at
//! plus/minus the 0.75 standard-normal quantile, so each tail carries mass
//! 1/4. Coefficient scenarios place a shared block of strong signals, a
//! sign-split block that differs across machine halves, and a two-slot
//! outlier block on the last machine.
//!
//! All drawing goes through named counter-based streams keyed by
//! `(seed, node, purpose)`, so a `(seed, scenario)` pair fully determines
//! every output and per-node generation is order-independent.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::model::Dataset;
use crate::rng::{normal_quantile, Purpose, StreamRng};

/// Scenario family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Fixed m, growing per-node sample size; block coefficients.
    GrowN,
    /// Fixed n, growing number of machines; block coefficients.
    GrowM,
    /// One-dimensional clustered location configuration.
    Cluster1d,
    /// One-dimensional evenly spaced locations `mu_k = 2k`.
    MedianFail1d,
}

/// Full scenario description.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub m: usize,
    /// Per-node sample sizes (length m).
    pub n: Vec<usize>,
    pub d: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Scenario {
    /// Scenario with the same sample size on every node.
    pub fn uniform(kind: ScenarioKind, m: usize, n: usize, d: usize, seed: u64) -> Self {
        Scenario {
            kind,
            m,
            n: vec![n; m],
            d,
            noise_sd: 0.05,
            seed,
        }
    }

    pub fn with_noise_sd(mut self, noise_sd: f64) -> Self {
        self.noise_sd = noise_sd;
        self
    }

    pub fn with_sizes(mut self, n: Vec<usize>) -> Self {
        self.n = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("scenario needs m >= 1"));
        }
        if self.n.len() != self.m {
            return Err(Error::dims(format!(
                "{} machines but {} sample sizes",
                self.m,
                self.n.len()
            )));
        }
        if self.n.contains(&0) {
            return Err(Error::invalid("every n_k must be >= 1"));
        }
        if !(self.noise_sd > 0.0) {
            return Err(Error::invalid("noise_sd must be positive"));
        }
        match self.kind {
            ScenarioKind::GrowN | ScenarioKind::GrowM => {
                if self.d < 12 {
                    return Err(Error::invalid(format!(
                        "block coefficients need d >= 12, got {}",
                        self.d
                    )));
                }
            }
            ScenarioKind::Cluster1d | ScenarioKind::MedianFail1d => {
                if self.d != 1 {
                    return Err(Error::invalid("1-D scenarios require d = 1"));
                }
            }
        }
        Ok(())
    }
}

/// Generating coefficients and the identified global parameter.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub local_coefs: Vec<Vec<f64>>,
    pub global_coef: Vec<f64>,
    /// `local_coefs[k] - global_coef`, exactly.
    pub local_deltas: Vec<Vec<f64>>,
}

impl GroundTruth {
    fn from_locals(local_coefs: Vec<Vec<f64>>, global_coef: Vec<f64>) -> Self {
        let local_deltas = local_coefs
            .iter()
            .map(|c| c.iter().zip(&global_coef).map(|(a, b)| a - b).collect())
            .collect();
        GroundTruth {
            local_coefs,
            global_coef,
            local_deltas,
        }
    }
}

/// Number of leading latent coordinates that carry AR(1) correlation.
const AR_COORDS: usize = 100;
/// Lag-1 autocorrelation of the latent process.
const AR_RHO: f64 = 0.75;

fn latent_row(rng: &mut StreamRng, d: usize) -> Vec<f64> {
    let q = AR_COORDS.min(d);
    let mut z = Vec::with_capacity(d);
    let innovation = (1.0 - AR_RHO * AR_RHO).sqrt();
    for j in 0..q {
        if j == 0 {
            z.push(rng.next_normal());
        } else {
            z.push(AR_RHO * z[j - 1] + innovation * rng.next_normal());
        }
    }
    for _ in q..d {
        z.push(rng.next_normal());
    }
    z
}

/// Generates one trichotomized design matrix.
pub fn gen_design(n: usize, d: usize, seed: u64) -> Mat {
    let cutoff = normal_quantile(0.75);
    let mut rng = StreamRng::new(seed, 0, Purpose::Design);
    let mut m = Mat::zeros(n, d);
    for i in 0..n {
        let z = latent_row(&mut rng, d);
        for (j, &zj) in z.iter().enumerate() {
            let x = if zj < -cutoff {
                -1.0
            } else if zj > cutoff {
                1.0
            } else {
                0.0
            };
            m.set(i, j, x);
        }
    }
    m
}

/// Block coefficient layout for `m` machines in dimension `d >= 12`:
/// coordinates 1-5 are +5 everywhere, coordinates 6-10 are +5 on the first
/// ceil(m/2) machines and -5 on the rest, and the last machine carries 40
/// in coordinates 11-12.
fn block_coefs(m: usize, d: usize) -> Vec<Vec<f64>> {
    let plus_half = m.div_ceil(2);
    (0..m)
        .map(|k| {
            let mut theta = vec![0.0; d];
            for t in theta.iter_mut().take(5) {
                *t = 5.0;
            }
            let sign = if k < plus_half { 5.0 } else { -5.0 };
            for t in theta.iter_mut().take(10).skip(5) {
                *t = sign;
            }
            if k == m - 1 {
                theta[10] = 40.0;
                theta[11] = 40.0;
            }
            theta
        })
        .collect()
}

/// Generates the datasets, ground truth, and the radius the scenario was
/// designed for.
pub fn gen_scenario(sc: &Scenario) -> Result<(Vec<Dataset>, GroundTruth, f64)> {
    sc.validate()?;
    match sc.kind {
        ScenarioKind::GrowN | ScenarioKind::GrowM => {
            let locals = block_coefs(sc.m, sc.d);
            let mut global = vec![0.0; sc.d];
            for g in global.iter_mut().take(5) {
                *g = 5.0;
            }
            let truth = GroundTruth::from_locals(locals, global);
            let datasets = regression_datasets(sc, &truth.local_coefs);
            Ok((datasets, truth, 5.0))
        }
        ScenarioKind::Cluster1d => {
            let outliers = (sc.m / 5).max(1).min(sc.m.saturating_sub(1));
            let inliers = sc.m - outliers;
            let mut locals = Vec::with_capacity(sc.m);
            for k in 0..inliers {
                let t = if inliers > 1 {
                    2.0 * k as f64 / (inliers - 1) as f64 - 1.0
                } else {
                    0.0
                };
                locals.push(vec![1.0 + 0.1 * t]);
            }
            for _ in inliers..sc.m {
                locals.push(vec![5.0]);
            }
            let truth = GroundTruth::from_locals(locals, vec![1.0]);
            let datasets = regression_datasets(sc, &truth.local_coefs);
            Ok((datasets, truth, 0.5))
        }
        ScenarioKind::MedianFail1d => {
            let locals: Vec<Vec<f64>> =
                (0..sc.m).map(|k| vec![2.0 * (k + 1) as f64]).collect();
            // Median-identified value: the middle location for odd m.
            let global = vec![(sc.m + 1) as f64];
            let truth = GroundTruth::from_locals(locals, global);
            let datasets = location_datasets(sc, &truth.local_coefs);
            Ok((datasets, truth, 1.0))
        }
    }
}

fn regression_datasets(sc: &Scenario, locals: &[Vec<f64>]) -> Vec<Dataset> {
    if sc.d == 1 {
        return location_datasets(sc, locals);
    }
    (0..sc.m)
        .map(|k| {
            let node_seed = StreamRng::derive(sc.seed, &[k as u64]);
            let design = gen_design(sc.n[k], sc.d, node_seed);
            let mut noise = StreamRng::new(node_seed, k as u64, Purpose::Noise);
            let mut y = design.mul_vec(&locals[k]);
            for v in &mut y {
                *v += sc.noise_sd * noise.next_normal();
            }
            Dataset::new(design, y, k as u64)
        })
        .collect()
}

/// 1-D datasets: a constant design column, so the node mean estimates the
/// node's location value.
fn location_datasets(sc: &Scenario, locals: &[Vec<f64>]) -> Vec<Dataset> {
    (0..sc.m)
        .map(|k| {
            let node_seed = StreamRng::derive(sc.seed, &[k as u64]);
            let design = Mat::from_cols(&[vec![1.0; sc.n[k]]]);
            let mut noise = StreamRng::new(node_seed, k as u64, Purpose::Noise);
            let y = (0..sc.n[k])
                .map(|_| locals[k][0] + sc.noise_sd * noise.next_normal())
                .collect();
            Dataset::new(design, y, k as u64)
        })
        .collect()
}

/// Writes a dataset in the columnar text format: a `n d` header line, then
/// one whitespace-separated row per observation with the response last.
/// Values print in shortest round-trip form, so a write/read cycle is
/// bit-exact.
pub fn write_dataset(ds: &Dataset, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{} {}", ds.n(), ds.dim())?;
    for i in 0..ds.n() {
        for j in 0..ds.dim() {
            write!(out, "{} ", ds.design.get(i, j))?;
        }
        writeln!(out, "{}", ds.response[i])?;
    }
    Ok(())
}

/// Reads the columnar text format. Parse failures name the offending line
/// (1-based).
pub fn read_dataset(input: &mut impl BufRead, node_id: u64) -> Result<Dataset> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::invalid("line 1: empty dataset file"))?;
    let header = header.map_err(|e| Error::invalid(format!("line 1: {e}")))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::invalid(format!(
            "line 1: expected header 'n d', got '{header}'"
        )));
    }
    let n: usize = parts[0]
        .parse()
        .map_err(|_| Error::invalid(format!("line 1: bad n '{}'", parts[0])))?;
    let d: usize = parts[1]
        .parse()
        .map_err(|_| Error::invalid(format!("line 1: bad d '{}'", parts[1])))?;

    let mut design = Mat::zeros(n, d);
    let mut response = Vec::with_capacity(n);
    for i in 0..n {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| Error::invalid(format!("line {}: missing row", i + 2)))?;
        let line = line.map_err(|e| Error::invalid(format!("line {}: {e}", line_no + 1)))?;
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != d + 1 {
            return Err(Error::invalid(format!(
                "line {}: expected {} values, found {}",
                line_no + 1,
                d + 1,
                vals.len()
            )));
        }
        for (j, tok) in vals.iter().enumerate() {
            let v: f64 = tok.parse().map_err(|_| {
                Error::invalid(format!("line {}: bad number '{tok}'", line_no + 1))
            })?;
            if j < d {
                design.set(i, j, v);
            } else {
                response.push(v);
            }
        }
    }
    Ok(Dataset::new(design, response, node_id))
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;

    /// One appendix-style node: block coefficients, trichotomized design,
    /// noise scale 0.05.
    pub fn appendix_node(n: usize, d: usize, seed: u64) -> (Dataset, Vec<f64>) {
        let sc = Scenario::uniform(ScenarioKind::GrowN, 1, n, d, seed);
        let (mut datasets, truth, _) = gen_scenario(&sc).unwrap();
        (datasets.remove(0), truth.local_coefs[0].clone())
    }
}
