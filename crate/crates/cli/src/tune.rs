//! Tuning table from injected constants, decay data or pre-runs.

use crate::config::{EstimateConfig, OfflineConfig, Schedule, TuneConfig, TuneSource};
use crate::error::CliError;
use crate::estimate::{estimate_indices, flagged, IndexRow};
use crate::output::num;
use crate::setup::Setup;
use certisens::tuner::{estimate_z, fit_error_decay, tuning_table, Bisection, IndexIntervalSummary, TuningModel, TuningSolution};
use certisens::Error;
use serde::Serialize;

pub const HEADER: [&str; 6] = ["P", "nStar", "NStar", "n_rounded", "N_rounded", "precision_rounded"];

#[derive(Debug, Serialize)]
pub struct PreRun {
    pub basis_size: usize,
    pub metamodel_error: f64,
    pub z: f64,
    pub rows: Vec<IndexRow>,
}

#[derive(Debug, Serialize)]
pub struct TuneResults {
    pub z: f64,
    pub c: f64,
    pub a: f64,
    pub z_negative: bool,
    pub pre_runs: Vec<PreRun>,
    pub table: Vec<Row>,
}

#[derive(Debug, Serialize)]
pub struct Row {
    pub precision: f64,
    pub n_star: f64,
    pub big_n_star: f64,
    pub n_rounded: u64,
    pub big_n_rounded: u64,
    pub precision_rounded: f64,
}

impl From<&TuningSolution> for Row {
    fn from(s: &TuningSolution) -> Self {
        Row {
            precision: s.precision,
            n_star: s.n_star,
            big_n_star: s.big_n_star,
            n_rounded: s.n_rounded,
            big_n_rounded: s.big_n_rounded,
            precision_rounded: s.precision_rounded,
        }
    }
}

impl Row {
    pub fn csv(&self) -> Vec<String> {
        vec![
            num(self.precision),
            num(self.n_star),
            num(self.big_n_star),
            self.n_rounded.to_string(),
            self.big_n_rounded.to_string(),
            num(self.precision_rounded),
        ]
    }
}

fn fit(e: Error) -> CliError {
    CliError::TunerFit(e)
}

fn pre_runs(
    setup: &Setup,
    offline: &OfflineConfig,
    est: &EstimateConfig,
    samples: usize,
    basis_sizes: &[usize],
    seed: u64,
) -> Result<Vec<PreRun>, CliError> {
    let mut out = Vec::new();
    for &n in basis_sizes {
        let reduced = setup.reduce(offline.snapshots, n, seed)?;
        let rows = estimate_indices(&reduced, setup.domain(), est, samples, seed)?;
        if let Some(e) = flagged(&rows) {
            return Err(e);
        }
        let parts: Vec<IndexIntervalSummary> = rows
            .iter()
            .map(|r| IndexIntervalSummary {
                ci_lo: r.ci_lo.unwrap_or_default(),
                ci_hi: r.ci_hi.unwrap_or_default(),
                lower: r.lower.unwrap_or_default(),
                upper: r.upper.unwrap_or_default(),
            })
            .collect();
        let z = estimate_z(samples, &parts)?.z;
        let metamodel_error = parts.iter().map(|p| p.upper - p.lower).sum::<f64>() / parts.len() as f64;
        out.push(PreRun { basis_size: n, metamodel_error, z, rows });
    }
    Ok(out)
}

pub fn run(
    setup: Option<&Setup>,
    offline: &OfflineConfig,
    est: &EstimateConfig,
    cfg: &TuneConfig,
    seed: u64,
) -> Result<TuneResults, CliError> {
    let mut runs = Vec::new();
    let (z, c, a) = match &cfg.source {
        TuneSource::Constants { z, c, a } => (*z, *c, *a),
        TuneSource::DecayData { z, pairs } => {
            let (c, a) = fit_error_decay(pairs).map_err(fit)?;
            (*z, c, a)
        }
        TuneSource::PreRuns { samples, basis_sizes } => {
            let setup = setup.ok_or_else(|| anyhow::anyhow!("pre-runs need a model"))?;
            runs = pre_runs(setup, offline, est, *samples, basis_sizes, seed)?;
            let pairs: Vec<(f64, f64)> = runs.iter().map(|r| (r.basis_size as f64, r.metamodel_error)).collect();
            let (c, a) = fit_error_decay(&pairs).map_err(fit)?;
            let z = runs.iter().map(|r| r.z).sum::<f64>() / runs.len() as f64;
            (z, c, a)
        }
    };
    let model = TuningModel::new(z, c, a).map_err(fit)?;
    let schedule = match cfg.schedule {
        Schedule::Converged => Bisection::default(),
        Schedule::Published => Bisection::published(),
    };
    let table = tuning_table(&model, &cfg.precisions, schedule).map_err(fit)?;
    Ok(TuneResults {
        z,
        c,
        a,
        z_negative: z < 0.0,
        pre_runs: runs,
        table: table.iter().map(Row::from).collect(),
    })
}
