//! Sobol sensitivity indices estimated through a certified surrogate, with
//! confidence intervals that cover both Monte Carlo and surrogate error.

pub mod cert;
pub mod combined;
pub mod domain;
pub mod error;
pub mod normal;
pub mod oracle;
pub mod rb;
pub mod rng;
pub mod sobol;
pub mod tuner;

pub use cert::{bound_pair, BoundMethod, BoundPair, MuGrid, SurrogateSample};
pub use combined::{combined_interval, CombinedConfig, CombinedInterval, EpsilonSamplingPolicy};
pub use domain::{evaluate_pairs, evaluate_surrogate_pairs, sample_design, Model, ParameterDomain, Surrogate, SurrogateEval};
pub use error::{Error, Result};
pub use sobol::{bc_interval, bootstrap_replicates, estimate_sobol, ConfidenceInterval};
