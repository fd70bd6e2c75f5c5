//! Full model and surrogate built from a model spec.

use crate::config::{ModelSpec, OfflineConfig};
use crate::error::CliError;
use crate::output::{read_reduced_model, ReducedModelFile};
use anyhow::Context;
use certisens::oracle::{LinearTestModel, SyntheticSurrogate, ToyDiffusionModel};
use certisens::rb::{build_snapshots, offline_reduce, pod_basis, random_parameters, AffineEllipticModel, ReducedModel};
use certisens::{Model, ParameterDomain, Surrogate, SurrogateEval};

/// Exact evaluation reported with a zero bound.
pub struct Exact<'a>(pub &'a dyn Model);

impl Surrogate for Exact<'_> {
    fn evaluate(&self, x: &[f64]) -> certisens::Result<SurrogateEval> {
        Ok(SurrogateEval { value: self.0.evaluate(x)?, bound: 0.0 })
    }
}

pub enum Setup {
    Affine { model: AffineEllipticModel, domain: ParameterDomain },
    Linear { model: LinearTestModel },
    Synthetic { model: LinearTestModel, surrogate: SyntheticSurrogate<LinearTestModel> },
}

fn linear(coeffs: &[f64], ranges: &Option<Vec<(f64, f64)>>) -> certisens::Result<LinearTestModel> {
    match ranges {
        Some(r) => LinearTestModel::new(coeffs.to_vec(), ParameterDomain::new(r.clone())?),
        None => LinearTestModel::unit(coeffs.to_vec()),
    }
}

impl Setup {
    pub fn build(spec: &ModelSpec) -> Result<Self, CliError> {
        Ok(match spec {
            ModelSpec::ToyDiffusion { nodes, ranges } => {
                let (model, domain) = ToyDiffusionModel::new(*nodes, ranges.clone())?.into_parts();
                Setup::Affine { model, domain }
            }
            ModelSpec::AffineFile { path, ranges } => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let model: AffineEllipticModel =
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                let domain = ParameterDomain::new(ranges.clone())?;
                if domain.dim() != model.parameters() {
                    return Err(anyhow::anyhow!(
                        "model has {} parameters but {} ranges are given",
                        model.parameters(),
                        domain.dim()
                    )
                    .into());
                }
                Setup::Affine { model, domain }
            }
            ModelSpec::Linear { coeffs, ranges } => Setup::Linear { model: linear(coeffs, ranges)? },
            ModelSpec::Synthetic { coeffs, ranges, level, reported_scale } => Setup::Synthetic {
                model: linear(coeffs, ranges)?,
                surrogate: SyntheticSurrogate::oscillating(linear(coeffs, ranges)?, *level)
                    .with_reported_scale(*reported_scale),
            },
        })
    }

    pub fn domain(&self) -> &ParameterDomain {
        match self {
            Setup::Affine { domain, .. } => domain,
            Setup::Linear { model } | Setup::Synthetic { model, .. } => model.domain(),
        }
    }

    pub fn full(&self) -> &dyn Model {
        match self {
            Setup::Affine { model, .. } => model,
            Setup::Linear { model } | Setup::Synthetic { model, .. } => model,
        }
    }

    /// Analytic first-order indices, when the model has them.
    pub fn analytic_indices(&self) -> Option<Vec<f64>> {
        match self {
            Setup::Affine { .. } => None,
            Setup::Linear { model } | Setup::Synthetic { model, .. } => model.analytic_sobol().ok(),
        }
    }

    /// Snapshots, POD basis of size n and offline reduction.
    pub fn reduce(&self, snapshots: usize, n: usize, seed: u64) -> Result<ReducedModel, CliError> {
        let Setup::Affine { model, domain } = self else {
            return Err(anyhow::anyhow!("the offline phase needs an affine elliptic model").into());
        };
        let offline = |e| CliError::Offline(e);
        let snap = build_snapshots(model, &random_parameters(domain, snapshots, seed)).map_err(offline)?;
        let basis = pod_basis(&snap, model.omega(), n).map_err(offline)?;
        offline_reduce(model, &basis).map_err(offline)
    }

    /// Surrogate for the estimation commands. Affine models use the file named
    /// in the config when given, otherwise a fresh offline phase.
    pub fn surrogate(&self, offline: &OfflineConfig, seed: u64) -> Result<SurrogateHandle<'_>, CliError> {
        Ok(match self {
            Setup::Affine { model, .. } => match &offline.reduced_model {
                Some(path) => {
                    let file: ReducedModelFile = read_reduced_model(path)?;
                    if file.reduced_model.full_dim() != model.dim() {
                        return Err(anyhow::anyhow!(
                            "reduced model has full dimension {} but the model has {}",
                            file.reduced_model.full_dim(),
                            model.dim()
                        )
                        .into());
                    }
                    SurrogateHandle::Reduced(Box::new(file.reduced_model))
                }
                None => SurrogateHandle::Reduced(Box::new(self.reduce(offline.snapshots, offline.basis_size, seed)?)),
            },
            Setup::Linear { model } => SurrogateHandle::Exact(Exact(model)),
            Setup::Synthetic { surrogate, .. } => SurrogateHandle::Synthetic(surrogate),
        })
    }
}

pub enum SurrogateHandle<'a> {
    Reduced(Box<ReducedModel>),
    Exact(Exact<'a>),
    Synthetic(&'a SyntheticSurrogate<LinearTestModel>),
}

impl SurrogateHandle<'_> {
    pub fn reduced(&self) -> Option<&ReducedModel> {
        match self {
            SurrogateHandle::Reduced(r) => Some(r),
            _ => None,
        }
    }

    pub fn get(&self) -> &dyn Surrogate {
        match self {
            SurrogateHandle::Reduced(r) => &**r,
            SurrogateHandle::Exact(e) => e,
            SurrogateHandle::Synthetic(s) => *s,
        }
    }
}
