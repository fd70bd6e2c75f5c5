//! Property suites: pointwise bounds, containment, degeneracy, grid audit
//! and coverage.

use crate::config::{EstimateConfig, ValidateConfig};
use crate::estimate::combined_config;
use crate::error::CliError;
use crate::output::bootstrap_seed;
use crate::setup::Setup;
use certisens::oracle::brute_force_bounds;
use certisens::rng::{substream, StreamRole};
use certisens::{
    bound_pair, combined_interval, estimate_sobol, evaluate_pairs, evaluate_surrogate_pairs, sample_design,
    BoundMethod, Error, MuGrid, Surrogate, SurrogateSample,
};
use rand::Rng;
use serde::Serialize;

/// Stream index for the pointwise check, away from the design streams.
const POINTWISE_STREAM: u64 = 100;
const AUDIT_ROWS: usize = 3;
const AUDIT_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Property {
    pub name: &'static str,
    /// None when the suite does not apply to the model.
    pub pass: Option<bool>,
    pub checked: usize,
    pub violations: usize,
    pub detail: String,
}

impl Property {
    fn new(name: &'static str, checked: usize, violations: usize, detail: String) -> Self {
        Self { name, pass: Some(violations == 0), checked, violations, detail }
    }

    pub fn line(&self) -> String {
        let verdict = match self.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        format!(
            "property {} {verdict}: {} checked, {} violations; {}",
            self.name, self.checked, self.violations, self.detail
        )
    }
}

fn pointwise(setup: &Setup, s: &dyn Surrogate, cfg: &ValidateConfig, seed: u64) -> Result<Property, CliError> {
    let mut rng = substream(seed, StreamRole::DesignA, POINTWISE_STREAM);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.points {
        let x = setup.domain().draw(&mut rng);
        let f = setup.full().evaluate(&x)?;
        let e = s.evaluate(&x)?;
        let err = (f - e.value).abs();
        if err > e.bound {
            violations += 1;
        }
        if e.bound > 0.0 {
            worst = worst.max(err / e.bound);
        }
    }
    Ok(Property::new("pointwise_bound", cfg.points, violations, format!("max error/bound {worst:.3}")))
}

fn admissible(s: &SurrogateSample, rng: &mut certisens::rng::Stream, vertex: bool) -> (Vec<f64>, Vec<f64>) {
    let mut pick = |e: f64| {
        let u = if vertex {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        } else {
            2.0 * rng.random::<f64>() - 1.0
        };
        u * e
    };
    let y = s.ytil().iter().zip(s.eps()).map(|(v, &e)| v + pick(e)).collect();
    let yp = s.ytil_prime().iter().zip(s.eps_prime()).map(|(v, &e)| v + pick(e)).collect();
    (y, yp)
}

fn containment(setup: &Setup, s: &dyn Surrogate, cfg: &ValidateConfig, grid: MuGrid, seed: u64) -> Result<Property, CliError> {
    let dim = setup.domain().dim();
    let (mut checked, mut violations, mut unavailable) = (0, 0, 0);
    for k in 0..cfg.instances {
        let design = sample_design(setup.domain(), k % dim + 1, cfg.samples, seed.wrapping_add(k as u64))?;
        let sample = evaluate_surrogate_pairs(s, &design)?;
        let bp = match bound_pair(&sample, &grid, &BoundMethod::default()) {
            Ok(bp) => bp,
            Err(Error::BoundUnavailable) => {
                unavailable += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let full = evaluate_pairs(setup.full(), &design)?;
        let truth = estimate_sobol(&full.y, &full.y_prime)?.value;
        checked += 1;
        violations += usize::from(!bp.contains(truth));
        let mut rng = substream(seed.wrapping_add(k as u64), StreamRole::DesignA, POINTWISE_STREAM + 1);
        for d in 0..cfg.draws {
            let (y, yp) = admissible(&sample, &mut rng, d % 2 == 1);
            let Ok(v) = estimate_sobol(&y, &yp) else { continue };
            checked += 1;
            violations += usize::from(!bp.contains(v.value));
        }
    }
    Ok(Property::new(
        "containment",
        checked,
        violations,
        format!("{} instances, {unavailable} without a bound", cfg.instances),
    ))
}

fn degeneracy(setup: &Setup, cfg: &ValidateConfig, grid: MuGrid, seed: u64) -> Result<Property, CliError> {
    let dim = setup.domain().dim();
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for k in 0..cfg.instances {
        let design = sample_design(setup.domain(), k % dim + 1, cfg.samples, seed.wrapping_add(k as u64))?;
        let full = evaluate_pairs(setup.full(), &design)?;
        let exact = SurrogateSample::exact(full.y, full.y_prime)?;
        let point = exact.point_estimate()?;
        let bp = bound_pair(&exact, &grid, &BoundMethod::default())?;
        let gap = bp.width().max((bp.lower - point).abs());
        worst = worst.max(gap);
        violations += usize::from(gap > 1e-10);
    }
    Ok(Property::new("degeneracy", cfg.instances, violations, format!("max width or offset {worst:.1e}")))
}

fn audit(setup: &Setup, s: &dyn Surrogate, cfg: &ValidateConfig, grid: MuGrid, seed: u64) -> Result<Property, CliError> {
    let dim = setup.domain().dim();
    let (mut checked, mut violations, mut skipped) = (0, 0, 0);
    for k in 0..cfg.audit_instances {
        let design = sample_design(setup.domain(), k % dim + 1, AUDIT_ROWS, seed.wrapping_add(k as u64))?;
        let sample = evaluate_surrogate_pairs(s, &design)?;
        let (Ok(bp), Ok((lo, hi))) =
            (bound_pair(&sample, &grid, &BoundMethod::default()), brute_force_bounds(&sample, AUDIT_POINTS))
        else {
            skipped += 1;
            continue;
        };
        checked += 1;
        violations += usize::from(!(bp.lower <= lo && hi <= bp.upper));
    }
    Ok(Property::new(
        "grid_audit",
        checked,
        violations,
        format!("{AUDIT_ROWS}-row samples, {AUDIT_POINTS} points per axis, {skipped} skipped"),
    ))
}

/// Lowest hit count compatible with the nominal level at three standard deviations.
fn coverage_floor(runs: usize, level: f64) -> usize {
    let n = runs as f64;
    (n * level - 3.0 * (n * level * (1.0 - level)).sqrt()).floor().max(0.0) as usize
}

fn coverage(
    setup: &Setup,
    s: &dyn Surrogate,
    cfg: &ValidateConfig,
    est: &EstimateConfig,
    seed: u64,
) -> Result<Property, CliError> {
    let Some(truth) = setup.analytic_indices() else {
        return Ok(Property {
            name: "coverage",
            pass: None,
            checked: 0,
            violations: 0,
            detail: "no analytic indices for this model".into(),
        });
    };
    let est = EstimateConfig { replicates: cfg.coverage_replicates, ..est.clone() };
    let (mut checked, mut misses) = (0, 0);
    for r in 0..cfg.coverage_runs {
        let run_seed = seed.wrapping_add(1000 + r as u64);
        for (j, &t) in truth.iter().enumerate() {
            let design = sample_design(setup.domain(), j + 1, est.samples, run_seed)?;
            let sample = evaluate_surrogate_pairs(s, &design)?;
            let ci = combined_interval(&sample, &combined_config(&est, bootstrap_seed(run_seed, j + 1))?)?;
            checked += 1;
            misses += usize::from(!ci.contains(t));
        }
    }
    let floor = coverage_floor(checked, 1.0 - est.alpha);
    let hits = checked - misses;
    Ok(Property {
        name: "coverage",
        pass: Some(hits >= floor),
        checked,
        violations: misses,
        detail: format!("{hits} hits, at least {floor} required at level {}", 1.0 - est.alpha),
    })
}

pub fn run(
    setup: &Setup,
    s: &dyn Surrogate,
    cfg: &ValidateConfig,
    est: &EstimateConfig,
    seed: u64,
) -> Result<Vec<Property>, CliError> {
    let grid = MuGrid::new(est.grid_points)?;
    Ok(vec![
        pointwise(setup, s, cfg, seed)?,
        containment(setup, s, cfg, grid, seed)?,
        degeneracy(setup, cfg, grid, seed)?,
        audit(setup, s, cfg, grid, seed)?,
        coverage(setup, s, cfg, est, seed)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coverage_floor_values() {
        assert_eq!(coverage_floor(0, 0.95), 0);
        assert_eq!(coverage_floor(100, 0.95), 88);
        assert_eq!(coverage_floor(40, 0.95), 33);
    }
}
