//! Per-index surrogate estimate, bound pair and combined interval.

use crate::config::EstimateConfig;
use crate::error::CliError;
use crate::output::{bootstrap_seed, num};
use certisens::combined::{combined_interval, CombinedConfig, EpsilonSamplingPolicy};
use certisens::{evaluate_surrogate_pairs, sample_design, BoundMethod, Error, MuGrid, ParameterDomain, Surrogate};
use serde::Serialize;

pub const HEADER: [&str; 8] = ["i", "Shat_surrogate", "Sm", "SM", "ci_lo", "ci_hi", "dropped_replicates", "status"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    BoundUnavailable,
    UnreliableReplication,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::BoundUnavailable => "bound_unavailable",
            Status::UnreliableReplication => "unreliable_replication",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexRow {
    pub index: usize,
    pub shat_surrogate: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub level: f64,
    pub dropped_replicates: Option<usize>,
    pub well_ordered: Option<bool>,
    pub lower_qq_correlation: Option<f64>,
    pub upper_qq_correlation: Option<f64>,
    pub status: Status,
}

impl IndexRow {
    pub fn csv(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        vec![
            self.index.to_string(),
            num(self.shat_surrogate),
            opt(self.lower),
            opt(self.upper),
            opt(self.ci_lo),
            opt(self.ci_hi),
            self.dropped_replicates.map(|d| d.to_string()).unwrap_or_default(),
            self.status.label().to_string(),
        ]
    }
}

pub fn indices(cfg: &EstimateConfig, domain: &ParameterDomain) -> Result<Vec<usize>, CliError> {
    let all: Vec<usize> = (1..=domain.dim()).collect();
    let idx = cfg.indices.clone().unwrap_or(all);
    if let Some(&bad) = idx.iter().find(|&&i| i > domain.dim()) {
        return Err(Error::BadIndex { index: bad, limit: domain.dim() }.into());
    }
    Ok(idx)
}

pub fn combined_config(cfg: &EstimateConfig, seed: u64) -> Result<CombinedConfig, CliError> {
    let policy = match &cfg.epsilon_sampling {
        Some(e) => EpsilonSamplingPolicy::constant(e.eta, e.eta_prime),
        None => EpsilonSamplingPolicy::default(),
    };
    Ok(CombinedConfig {
        replicates: cfg.replicates,
        alpha: cfg.alpha,
        policy,
        grid: MuGrid::new(cfg.grid_points)?,
        method: BoundMethod::default(),
        seed,
    })
}

/// One row per index on a design of `samples` rows drawn with `seed`.
pub fn estimate_indices(
    surrogate: &dyn Surrogate,
    domain: &ParameterDomain,
    cfg: &EstimateConfig,
    samples: usize,
    seed: u64,
) -> Result<Vec<IndexRow>, CliError> {
    let mut rows = Vec::new();
    for i in indices(cfg, domain)? {
        let design = sample_design(domain, i, samples, seed)?;
        let sample = evaluate_surrogate_pairs(surrogate, &design)?;
        let shat = sample.point_estimate()?;
        let combined = combined_config(cfg, bootstrap_seed(seed, i))?;
        let mut row = IndexRow {
            index: i,
            shat_surrogate: shat,
            lower: None,
            upper: None,
            ci_lo: None,
            ci_hi: None,
            level: 1.0 - cfg.alpha,
            dropped_replicates: None,
            well_ordered: None,
            lower_qq_correlation: None,
            upper_qq_correlation: None,
            status: Status::Ok,
        };
        match combined_interval(&sample, &combined) {
            Ok(ci) => {
                row.lower = Some(ci.point.lower);
                row.upper = Some(ci.point.upper);
                row.ci_lo = Some(ci.lo);
                row.ci_hi = Some(ci.hi);
                row.dropped_replicates = Some(ci.dropped);
                row.well_ordered = Some(ci.well_ordered);
                row.lower_qq_correlation = ci.lower_qq.correlation;
                row.upper_qq_correlation = ci.upper_qq.correlation;
            }
            Err(Error::BoundUnavailable) => row.status = Status::BoundUnavailable,
            Err(Error::UnreliableReplication { dropped, .. }) => {
                let bp = certisens::bound_pair(&sample, &combined.grid, &combined.method)?;
                row.lower = Some(bp.lower);
                row.upper = Some(bp.upper);
                row.dropped_replicates = Some(dropped);
                row.status = Status::UnreliableReplication;
            }
            Err(e) => return Err(e.into()),
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Error for the first flagged row, if any.
pub fn flagged(rows: &[IndexRow]) -> Option<CliError> {
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r.status != Status::Ok)
        .map(|r| format!("index {} ({})", r.index, r.status.label()))
        .collect();
    (!bad.is_empty()).then(|| CliError::BoundUnavailable(bad.join(", ")))
}
