//! Run configuration, read from JSON. Unknown keys are rejected.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SEED_ENV: &str = "CERTISENS_SEED";
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// One-dimensional diffusion with two blended conductivities.
    ToyDiffusion {
        #[serde(default = "default_nodes")]
        nodes: usize,
        #[serde(default = "default_toy_ranges")]
        ranges: Vec<(f64, f64)>,
    },
    /// Serialized affine elliptic model on the given input box.
    AffineFile { path: PathBuf, ranges: Vec<(f64, f64)> },
    /// Σ c_j x_j, evaluated exactly.
    Linear { coeffs: Vec<f64>, ranges: Option<Vec<(f64, f64)>> },
    /// Linear model behind a surrogate with a known bounded error.
    Synthetic {
        coeffs: Vec<f64>,
        ranges: Option<Vec<(f64, f64)>>,
        level: f64,
        /// Below 1 the surrogate under-reports its error.
        #[serde(default = "one")]
        reported_scale: f64,
    },
}

fn default_nodes() -> usize {
    certisens::oracle::DEFAULT_NODES
}

fn default_toy_ranges() -> Vec<(f64, f64)> {
    certisens::oracle::DEFAULT_RANGES.to_vec()
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfflineConfig {
    pub snapshots: usize,
    pub basis_size: usize,
    /// Reduced model to load instead of running the offline phase.
    pub reduced_model: Option<PathBuf>,
}

impl Default for OfflineConfig {
    fn default() -> Self {
        Self { snapshots: 30, basis_size: 4, reduced_model: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSampling {
    pub eta: f64,
    pub eta_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateConfig {
    pub samples: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub grid_points: usize,
    /// 1-based input indices; all of them when absent.
    pub indices: Option<Vec<usize>>,
    pub epsilon_sampling: Option<EpsilonSampling>,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self { samples: 300, replicates: 2000, alpha: 0.05, grid_points: 5, indices: None, epsilon_sampling: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    #[default]
    Converged,
    /// Fixed-midpoint bisection matching the published table.
    Published,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TuneSource {
    Constants { z: f64, c: f64, a: f64 },
    /// Metamodel error measurements (n, e) with a known sampling constant.
    DecayData { z: f64, pairs: Vec<(f64, f64)> },
    /// Estimation runs at fixed sample size over several basis sizes.
    PreRuns { samples: usize, basis_sizes: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    #[serde(default)]
    pub precisions: Vec<f64>,
    #[serde(default)]
    pub schedule: Schedule,
    pub source: TuneSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    /// Random points for the pointwise bound check.
    pub points: usize,
    pub instances: usize,
    pub samples: usize,
    /// Admissible draws per containment instance.
    pub draws: usize,
    pub audit_instances: usize,
    pub coverage_runs: usize,
    pub coverage_replicates: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            points: 1000,
            instances: 10,
            samples: 100,
            draws: 1000,
            audit_instances: 5,
            coverage_runs: 20,
            coverage_replicates: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub offline: OfflineConfig,
    #[serde(default)]
    pub estimate: EstimateConfig,
    #[serde(default)]
    pub tune: Option<TuneConfig>,
    #[serde(default)]
    pub validate: ValidateConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Flag,
    Config,
    Environment,
    Default,
}

/// Picks the seed: flag, then config, then environment, then the default.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>, env: Option<&str>) -> anyhow::Result<(u64, SeedSource)> {
    if let Some(s) = flag {
        return Ok((s, SeedSource::Flag));
    }
    if let Some(s) = config {
        return Ok((s, SeedSource::Config));
    }
    if let Some(v) = env {
        let s = v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer"))?;
        return Ok((s, SeedSource::Environment));
    }
    Ok((DEFAULT_SEED, SeedSource::Default))
}

fn positive(what: &str, v: usize) -> anyhow::Result<()> {
    if v == 0 {
        bail!("{what} must be positive");
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.check()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let ModelSpec::AffineFile { path, .. } = &mut self.model {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let Some(p) = &mut self.offline.reduced_model {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn check(&self) -> anyhow::Result<()> {
        let finite = |what: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(anyhow::anyhow!("{what} must be finite"))
            }
        };
        match &self.model {
            ModelSpec::ToyDiffusion { nodes, .. } => positive("model.nodes", *nodes)?,
            ModelSpec::Synthetic { level, reported_scale, .. } => {
                if !(*level >= 0.0 && level.is_finite()) {
                    bail!("model.level must be a nonnegative number");
                }
                if !(*reported_scale >= 0.0 && reported_scale.is_finite()) {
                    bail!("model.reported_scale must be a nonnegative number");
                }
            }
            _ => {}
        }
        positive("offline.snapshots", self.offline.snapshots)?;
        positive("offline.basis_size", self.offline.basis_size)?;
        let e = &self.estimate;
        if e.samples < 2 {
            bail!("estimate.samples must be at least 2");
        }
        if e.replicates < 100 {
            bail!("estimate.replicates must be at least 100");
        }
        if !(e.alpha > 0.0 && e.alpha < 1.0) {
            bail!("estimate.alpha must lie in (0, 1)");
        }
        if e.grid_points < 3 || e.grid_points % 2 == 0 {
            bail!("estimate.grid_points must be odd and at least 3");
        }
        if let Some(idx) = &e.indices {
            if idx.is_empty() || idx.contains(&0) {
                bail!("estimate.indices must be a nonempty list of 1-based indices");
            }
        }
        if let Some(s) = &e.epsilon_sampling {
            for (what, v) in [("eta", s.eta), ("eta_prime", s.eta_prime)] {
                if !(0.0..=1.0).contains(&v) {
                    bail!("estimate.epsilon_sampling.{what} must lie in [0, 1]");
                }
            }
        }
        if let Some(t) = &self.tune {
            for &p in &t.precisions {
                if !(p > 0.0 && p.is_finite()) {
                    bail!("tune.precisions must be positive numbers");
                }
            }
            match &t.source {
                TuneSource::Constants { z, c, a } => {
                    finite("tune.source.z", *z)?;
                    finite("tune.source.c", *c)?;
                    finite("tune.source.a", *a)?;
                }
                TuneSource::DecayData { z, pairs } => {
                    finite("tune.source.z", *z)?;
                    for &(n, err) in pairs {
                        finite("tune.source.pairs", n)?;
                        finite("tune.source.pairs", err)?;
                    }
                }
                TuneSource::PreRuns { samples, basis_sizes } => {
                    if *samples < 2 {
                        bail!("tune.source.samples must be at least 2");
                    }
                    if basis_sizes.contains(&0) {
                        bail!("tune.source.basis_sizes must be positive");
                    }
                }
            }
        }
        let v = &self.validate;
        if v.samples < 3 {
            bail!("validate.samples must be at least 3");
        }
        if v.coverage_runs > 0 && v.coverage_replicates < 100 {
            bail!("validate.coverage_replicates must be at least 100");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_priority() {
        assert_eq!(resolve_seed(Some(1), Some(2), Some("3")).unwrap(), (1, SeedSource::Flag));
        assert_eq!(resolve_seed(None, Some(2), Some("3")).unwrap(), (2, SeedSource::Config));
        assert_eq!(resolve_seed(None, None, Some(" 3 ")).unwrap(), (3, SeedSource::Environment));
        assert_eq!(resolve_seed(None, None, None).unwrap(), (DEFAULT_SEED, SeedSource::Default));
        assert!(resolve_seed(None, None, Some("x")).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let ok = r#"{"model": {"kind": "linear", "coeffs": [1, 2]}}"#;
        assert!(serde_json::from_str::<RunConfig>(ok).is_ok());
        let top = r#"{"model": {"kind": "linear", "coeffs": [1, 2]}, "sed": 3}"#;
        assert!(serde_json::from_str::<RunConfig>(top).is_err());
        let nested = r#"{"model": {"kind": "linear", "coeffs": [1, 2]}, "estimate": {"sample": 10}}"#;
        assert!(serde_json::from_str::<RunConfig>(nested).is_err());
        let model = r#"{"model": {"kind": "linear", "coeffs": [1, 2], "level": 1}}"#;
        assert!(serde_json::from_str::<RunConfig>(model).is_err());
    }

    #[test]
    fn ranges_are_checked() {
        let mut cfg: RunConfig = serde_json::from_str(r#"{"model": {"kind": "toy_diffusion"}}"#).unwrap();
        assert!(cfg.check().is_ok());
        cfg.estimate.grid_points = 4;
        assert!(cfg.check().is_err());
        cfg.estimate.grid_points = 5;
        cfg.estimate.alpha = 1.0;
        assert!(cfg.check().is_err());
        cfg.estimate.alpha = 0.05;
        cfg.estimate.replicates = 10;
        assert!(cfg.check().is_err());
    }
}
