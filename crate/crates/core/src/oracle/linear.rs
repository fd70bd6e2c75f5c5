use crate::domain::{Model, ParameterDomain};
use crate::error::{Error, Result};

/// f(x) = Σ c_j x_j with independent uniform inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTestModel {
    coeffs: Vec<f64>,
    domain: ParameterDomain,
}

impl LinearTestModel {
    pub fn new(coeffs: Vec<f64>, domain: ParameterDomain) -> Result<Self> {
        if coeffs.len() != domain.dim() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {} inputs",
                coeffs.len(),
                domain.dim()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        Ok(Self { coeffs, domain })
    }

    /// Model on unit ranges.
    pub fn unit(coeffs: Vec<f64>) -> Result<Self> {
        let domain = ParameterDomain::new(vec![(0.0, 1.0); coeffs.len()])?;
        Self::new(coeffs, domain)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn domain(&self) -> &ParameterDomain {
        &self.domain
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// First-order indices c_j² w_j² / Σ_k c_k² w_k².
    pub fn analytic_sobol(&self) -> Result<Vec<f64>> {
        let parts: Vec<f64> = self
            .coeffs
            .iter()
            .zip(self.domain.ranges())
            .map(|(c, (lo, hi))| (c * (hi - lo)).powi(2))
            .collect();
        let total: f64 = parts.iter().sum();
        if total == 0.0 {
            return Err(Error::Degenerate("all coefficients are zero".into()));
        }
        Ok(parts.iter().map(|p| p / total).collect())
    }
}

impl Model for LinearTestModel {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_indices() {
        let s = LinearTestModel::unit(vec![1.0, 2.0]).unwrap().analytic_sobol().unwrap();
        assert!((s[0] - 0.2).abs() < 1e-15 && (s[1] - 0.8).abs() < 1e-15);
        let s = LinearTestModel::unit(vec![1.0, 0.0, 0.0]).unwrap().analytic_sobol().unwrap();
        assert_eq!(s, vec![1.0, 0.0, 0.0]);
        let s = LinearTestModel::unit(vec![3.0; 4]).unwrap().analytic_sobol().unwrap();
        assert!(s.iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn widths_enter_squared() {
        let d = ParameterDomain::new(vec![(0.0, 2.0), (5.0, 6.0)]).unwrap();
        let s = LinearTestModel::new(vec![1.0, 1.0], d).unwrap().analytic_sobol().unwrap();
        assert!((s[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_model_is_degenerate() {
        assert!(matches!(
            LinearTestModel::unit(vec![0.0, 0.0]).unwrap().analytic_sobol(),
            Err(Error::Degenerate(_))
        ));
        assert!(LinearTestModel::unit(vec![]).is_err());
    }
}
