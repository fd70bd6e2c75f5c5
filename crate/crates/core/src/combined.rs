//! Confidence intervals covering sampling and surrogate error together.
//!
//! Each bootstrap replicate resamples whole rows (ỹ, ỹ', ε, ε'), optionally
//! shrinks the bounds by sampled effectivities, and recomputes the bound
//! pair. The interval is the bias-corrected lower quantile of the lower
//! bounds joined to the bias-corrected upper quantile of the upper bounds.

use crate::cert::{bound_pair, BoundMethod, BoundPair, MuGrid, SurrogateSample};
use crate::error::{Error, Result};
use crate::normal::std_normal_quantile;
use crate::rng::{substream, Stream, StreamRole};
use crate::sobol::{bc_endpoint, check_alpha, check_replicate_count, draw_indices, empirical_quantile};
use rand::Rng;
use rayon::prelude::*;

/// Largest fraction of failed replicates tolerated.
pub const MAX_DROP_RATE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub enum Effectivity {
    Constant(f64),
    PerPoint(Vec<f64>),
}

impl Effectivity {
    fn at(&self, k: usize) -> f64 {
        match self {
            Effectivity::Constant(v) => *v,
            Effectivity::PerPoint(v) => v[k],
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        let values: &[f64] = match self {
            Effectivity::Constant(v) => std::slice::from_ref(v),
            Effectivity::PerPoint(v) => {
                if v.len() != n {
                    return Err(Error::InvalidArgument(format!(
                        "{} effectivities for {n} rows",
                        v.len()
                    )));
                }
                v
            }
        };
        check_effectivities(values)
    }
}

fn check_effectivities(eta: &[f64]) -> Result<()> {
    match eta.iter().find(|&&e| !(0.0..=1.0).contains(&e)) {
        Some(&bad) => Err(Error::BadEffectivity(bad)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSamplingPolicy {
    pub enabled: bool,
    pub eta: Effectivity,
    pub eta_prime: Effectivity,
}

impl Default for EpsilonSamplingPolicy {
    fn default() -> Self {
        Self {
            enabled: false,
            eta: Effectivity::Constant(1.0),
            eta_prime: Effectivity::Constant(1.0),
        }
    }
}

impl EpsilonSamplingPolicy {
    pub fn constant(eta: f64, eta_prime: f64) -> Self {
        Self {
            enabled: true,
            eta: Effectivity::Constant(eta),
            eta_prime: Effectivity::Constant(eta_prime),
        }
    }
}

/// Draws ε*_k uniformly on [η_k ε_k, ε_k].
pub fn epsilon_resample(eps: &[f64], eta: &[f64], rng: &mut Stream) -> Result<Vec<f64>> {
    if eps.len() != eta.len() {
        return Err(Error::InvalidArgument("bounds and effectivities differ in length".into()));
    }
    check_effectivities(eta)?;
    Ok(eps
        .iter()
        .zip(eta)
        .map(|(&e, &h)| {
            let lo = h * e;
            lo + rng.random::<f64>() * (e - lo)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinedConfig {
    pub replicates: usize,
    pub alpha: f64,
    pub policy: EpsilonSamplingPolicy,
    pub grid: MuGrid,
    pub method: BoundMethod,
    pub seed: u64,
}

impl Default for CombinedConfig {
    fn default() -> Self {
        Self {
            replicates: 2000,
            alpha: 0.05,
            policy: EpsilonSamplingPolicy::default(),
            grid: MuGrid::default(),
            method: BoundMethod::default(),
            seed: 0,
        }
    }
}

/// Normal QQ pairs at levels 1/100, ..., 99/100.
#[derive(Debug, Clone, PartialEq)]
pub struct QqSummary {
    pub points: Vec<(f64, f64)>,
    pub correlation: Option<f64>,
    pub degenerate: bool,
}

pub fn replicate_qq_summary(replicates: &[f64]) -> QqSummary {
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.is_empty() {
        return QqSummary { points: Vec::new(), correlation: None, degenerate: true };
    }
    let points: Vec<(f64, f64)> = (1..100)
        .map(|j| {
            let p = j as f64 / 100.0;
            (std_normal_quantile(p).expect("interior level"), empirical_quantile(&sorted, p))
        })
        .collect();
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let degenerate = sorted[0] == sorted[sorted.len() - 1];
    let correlation = if degenerate { None } else { Some(sxy / (sxx * syy).sqrt()) };
    QqSummary { points, correlation, degenerate }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinedInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    /// Bound pair on the full sample.
    pub point: BoundPair,
    pub lower_replicates: Vec<f64>,
    pub upper_replicates: Vec<f64>,
    pub dropped: usize,
    /// False when `lo > hi`; the endpoints are reported as computed.
    pub well_ordered: bool,
    pub lower_qq: QqSummary,
    pub upper_qq: QqSummary,
}

impl CombinedInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

fn replicate(s: &SurrogateSample, cfg: &CombinedConfig, b: usize) -> Result<Option<BoundPair>> {
    let mut rng = substream(cfg.seed, StreamRole::Bootstrap, b as u64);
    let idx = draw_indices(&mut rng, s.len());
    let mut rs = s.resample(&idx);
    if cfg.policy.enabled {
        let mut erng = substream(cfg.seed, StreamRole::EpsilonSampling, b as u64);
        let eta: Vec<f64> = idx.iter().map(|&k| cfg.policy.eta.at(k)).collect();
        let eta_p: Vec<f64> = idx.iter().map(|&k| cfg.policy.eta_prime.at(k)).collect();
        let e = epsilon_resample(rs.eps(), &eta, &mut erng)?;
        let ep = epsilon_resample(rs.eps_prime(), &eta_p, &mut erng)?;
        rs = rs.with_bounds(e, ep)?;
    }
    match bound_pair(&rs, &cfg.grid, &cfg.method) {
        Ok(bp) => Ok(Some(bp)),
        Err(Error::BoundUnavailable) | Err(Error::DegenerateSample) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn combined_interval(s: &SurrogateSample, cfg: &CombinedConfig) -> Result<CombinedInterval> {
    check_alpha(cfg.alpha)?;
    check_replicate_count(cfg.replicates)?;
    cfg.policy.eta.check(s.len())?;
    cfg.policy.eta_prime.check(s.len())?;
    let point = bound_pair(s, &cfg.grid, &cfg.method)?;

    let results: Vec<Result<Option<BoundPair>>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|b| replicate(s, cfg, b))
        .collect();
    let mut lower_replicates = Vec::with_capacity(cfg.replicates);
    let mut upper_replicates = Vec::with_capacity(cfg.replicates);
    let mut dropped = 0;
    for r in results {
        match r? {
            Some(bp) => {
                lower_replicates.push(bp.lower);
                upper_replicates.push(bp.upper);
            }
            None => dropped += 1,
        }
    }
    if dropped as f64 > MAX_DROP_RATE * cfg.replicates as f64 {
        return Err(Error::UnreliableReplication { dropped, total: cfg.replicates });
    }
    let lo = bc_endpoint(&lower_replicates, point.lower, cfg.alpha / 2.0);
    let hi = bc_endpoint(&upper_replicates, point.upper, 1.0 - cfg.alpha / 2.0);
    Ok(CombinedInterval {
        lo,
        hi,
        level: 1.0 - cfg.alpha,
        point,
        lower_qq: replicate_qq_summary(&lower_replicates),
        upper_qq: replicate_qq_summary(&upper_replicates),
        lower_replicates,
        upper_replicates,
        dropped,
        well_ordered: lo <= hi,
    })
}
