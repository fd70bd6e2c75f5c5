use crate::domain::{Model, Surrogate, SurrogateEval};
use crate::error::{Error, Result};

type Field = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Surrogate built from a known model: value f(x) + s(x)ε(x) with
/// s clamped to [-1, 1], reported bound `scale`·ε(x).
///
/// The bound carries a relative allowance of a few ulps for the rounding of
/// f(x) + s(x)ε(x). With `scale` ≥ 1 it is valid by construction; below 1
/// the surrogate under-reports its error.
pub struct SyntheticSurrogate<M> {
    base: M,
    bound_fn: Field,
    shape_fn: Field,
    reported_scale: f64,
}

impl<M: Model> SyntheticSurrogate<M> {
    pub fn new<B, S>(base: M, bound_fn: B, shape_fn: S) -> Self
    where
        B: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        S: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { base, bound_fn: Box::new(bound_fn), shape_fn: Box::new(shape_fn), reported_scale: 1.0 }
    }

    /// Constant bound `level` with an oscillating perturbation.
    pub fn oscillating(base: M, level: f64) -> Self {
        Self::new(base, move |_| level, |x: &[f64]| (7.0 * x.iter().sum::<f64>() + 0.3).sin())
    }

    pub fn with_reported_scale(mut self, scale: f64) -> Self {
        self.reported_scale = scale;
        self
    }

    pub fn base(&self) -> &M {
        &self.base
    }
}

impl<M: Model> Surrogate for SyntheticSurrogate<M> {
    fn evaluate(&self, x: &[f64]) -> Result<SurrogateEval> {
        let eps = (self.bound_fn)(x);
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("bound function returned {eps}")));
        }
        let f = self.base.evaluate(x)?;
        let delta = (self.shape_fn)(x).clamp(-1.0, 1.0) * eps;
        let value = f + delta;
        let rounding = 2.0 * f64::EPSILON * (f.abs() + eps);
        Ok(SurrogateEval { value, bound: self.reported_scale * (eps + rounding) })
    }
}
