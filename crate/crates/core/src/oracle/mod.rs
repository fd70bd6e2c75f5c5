//! Test models with known answers and exhaustive or heuristic audits of the
//! certified bounds.

mod audit;
mod linear;
mod synthetic;
mod toy;

pub use audit::{anneal_bounds, brute_force_bounds, psi_ratio, AnnealSchedule, BRUTE_FORCE_BUDGET};
pub use linear::LinearTestModel;
pub use synthetic::SyntheticSurrogate;
pub use toy::{ToyDiffusionModel, DEFAULT_NODES, DEFAULT_RANGES};
