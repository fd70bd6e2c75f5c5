//! Pick-freeze index estimation and bias-corrected percentile bootstrap.

use crate::error::{Error, Result};
use crate::normal::{std_normal_cdf, std_normal_quantile};
use crate::rng::{substream, Stream, StreamRole};
use rand::Rng;
use rayon::prelude::*;

/// Redraws allowed for a zero-variance bootstrap resample.
pub const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolEstimate {
    pub value: f64,
    pub samples: usize,
}

/// Centered cross and square sums of a paired sample, Σ(y-ȳ)(y'-ȳ') and Σ(y-ȳ)².
pub(crate) fn centered_sums(y: &[f64], yp: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let myp = yp.iter().sum::<f64>() / n;
    let mut cross = 0.0;
    let mut square = 0.0;
    for (a, b) in y.iter().zip(yp) {
        let c = a - my;
        cross += c * (b - myp);
        square += c * c;
    }
    (cross, square)
}

/// Zero-variance test shared by every ratio evaluation.
pub(crate) fn is_degenerate(y: &[f64], square: f64) -> bool {
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = y.len() as f64 * (4.0 * f64::EPSILON * scale).powi(2);
    !(square > floor)
}

pub(crate) fn ratio(y: &[f64], yp: &[f64]) -> Result<f64> {
    let (cross, square) = centered_sums(y, yp);
    if is_degenerate(y, square) {
        return Err(Error::DegenerateSample);
    }
    Ok(cross / square)
}

pub fn estimate_sobol(y: &[f64], y_prime: &[f64]) -> Result<SobolEstimate> {
    if y.len() != y_prime.len() {
        return Err(Error::InvalidArgument("paired samples differ in length".into()));
    }
    if y.len() < 2 {
        return Err(Error::DesignTooSmall(y.len()));
    }
    Ok(SobolEstimate { value: ratio(y, y_prime)?, samples: y.len() })
}

/// A with-replacement index list of length `n`.
pub fn draw_indices(rng: &mut Stream, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Applies the estimator to the rows listed in `indices`, keeping pairs together.
pub fn replicate_from_indices(y: &[f64], y_prime: &[f64], indices: &[usize]) -> Result<f64> {
    let ys: Vec<f64> = indices.iter().map(|&k| y[k]).collect();
    let yps: Vec<f64> = indices.iter().map(|&k| y_prime[k]).collect();
    ratio(&ys, &yps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapReplicates {
    pub values: Vec<f64>,
    pub seed: u64,
    /// Zero-variance resamples that were redrawn.
    pub redrawn: usize,
}

pub fn bootstrap_replicates(
    y: &[f64],
    y_prime: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<BootstrapReplicates> {
    estimate_sobol(y, y_prime)?;
    if replicates == 0 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    let n = y.len();
    let out: Vec<Result<(f64, usize)>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, StreamRole::Bootstrap, b as u64);
            for attempt in 0..=MAX_REDRAWS {
                let idx = draw_indices(&mut rng, n);
                match replicate_from_indices(y, y_prime, &idx) {
                    Ok(v) => return Ok((v, attempt)),
                    Err(Error::DegenerateSample) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::DegenerateBootstrap)
        })
        .collect();
    let mut values = Vec::with_capacity(replicates);
    let mut redrawn = 0;
    for r in out {
        let (v, k) = r?;
        values.push(v);
        redrawn += k;
    }
    Ok(BootstrapReplicates { values, seed, redrawn })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn new(lo: f64, hi: f64, level: f64) -> Result<Self> {
        if lo > hi {
            return Err(Error::IntervalOrder { lo, hi });
        }
        Ok(Self { lo, hi, level })
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Order statistic with 1-based index ceil(q·B), clamped to [1, B].
/// `sorted` must be ascending. A 1e-9 slack absorbs rounding in q·B.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let b = sorted.len();
    let raw = (q * b as f64 - 1e-9).ceil();
    let idx = if raw < 1.0 { 1 } else { (raw as usize).min(b) };
    sorted[idx - 1]
}

/// ẑ₀ from the proportion of replicates at or below the point estimate,
/// clamped into [1/(B+1), B/(B+1)].
pub fn bias_constant(replicates: &[f64], point: f64) -> f64 {
    let b = replicates.len() as f64;
    let count = replicates.iter().filter(|&&v| v <= point).count() as f64;
    let prop = (count / b).clamp(1.0 / (b + 1.0), b / (b + 1.0));
    std_normal_quantile(prop).expect("clamped proportion is inside (0, 1)")
}

/// Corrected quantile level cdf(2ẑ₀ + z_β).
pub fn corrected_level(z0: f64, beta: f64) -> f64 {
    if z0 == 0.0 {
        return beta;
    }
    std_normal_cdf(2.0 * z0 + std_normal_quantile(beta).expect("level inside (0, 1)"))
}

/// One bias-corrected endpoint at nominal level `beta`.
pub fn bc_endpoint(replicates: &[f64], point: f64, beta: f64) -> f64 {
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let z0 = bias_constant(&sorted, point);
    empirical_quantile(&sorted, corrected_level(z0, beta))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")))
    }
}

pub(crate) fn check_replicate_count(b: usize) -> Result<()> {
    if b < 100 {
        Err(Error::InvalidArgument(format!("need at least 100 replicates, got {b}")))
    } else {
        Ok(())
    }
}

pub fn bc_interval(replicates: &[f64], point: f64, alpha: f64) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    check_replicate_count(replicates.len())?;
    if replicates.iter().all(|&v| v == replicates[0]) {
        return Err(Error::DegenerateBootstrap);
    }
    let lo = bc_endpoint(replicates, point, alpha / 2.0);
    let hi = bc_endpoint(replicates, point, 1.0 - alpha / 2.0);
    ConfidenceInterval::new(lo, hi, 1.0 - alpha)
}
