use crate::domain::{Model, ParameterDomain};
use crate::error::Result;
use crate::rb::{AffineEllipticModel, ThetaFn};
use nalgebra::{DMatrix, DVector};

/// -(k u')' = 1 on (0, 1), u(0) = u(1) = 0, with conductivity
/// k(s) = (1 - s)·x₁ + s·x₂ and output the mean of u.
///
/// Piecewise-linear elements on a uniform grid; the inner product is the
/// unit-conductivity stiffness plus the mass matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDiffusionModel {
    model: AffineEllipticModel,
    domain: ParameterDomain,
}

pub const DEFAULT_NODES: usize = 64;
pub const DEFAULT_RANGES: [(f64, f64); 2] = [(1.0, 3.0), (1.0, 3.0)];

impl Default for ToyDiffusionModel {
    fn default() -> Self {
        Self::new(DEFAULT_NODES, DEFAULT_RANGES.to_vec()).expect("default toy model is valid")
    }
}

impl ToyDiffusionModel {
    /// `nodes` interior nodes; `ranges` must stay strictly positive.
    pub fn new(nodes: usize, ranges: Vec<(f64, f64)>) -> Result<Self> {
        let domain = ParameterDomain::new(ranges)?;
        if domain.dim() != 2 || domain.ranges().iter().any(|r| r.0 <= 0.0) {
            return Err(crate::error::Error::BadDomain("toy diffusion needs two positive conductivity ranges".into()));
        }
        if nodes < 1 {
            return Err(crate::error::Error::InvalidArgument("need at least one interior node".into()));
        }
        let h = 1.0 / (nodes + 1) as f64;
        let mut k1 = DMatrix::zeros(nodes, nodes);
        let mut k2 = DMatrix::zeros(nodes, nodes);
        let mut mass = DMatrix::zeros(nodes, nodes);
        let local_k = [[1.0, -1.0], [-1.0, 1.0]];
        let local_m = [[2.0 * h / 6.0, h / 6.0], [h / 6.0, 2.0 * h / 6.0]];
        for el in 0..=nodes {
            let mid = (el as f64 + 0.5) * h;
            let (w1, w2) = (1.0 - mid, mid);
            let dofs = [el as isize - 1, el as isize];
            for (a, &i) in dofs.iter().enumerate() {
                for (b, &j) in dofs.iter().enumerate() {
                    if i < 0 || j < 0 || i as usize >= nodes || j as usize >= nodes {
                        continue;
                    }
                    let (i, j) = (i as usize, j as usize);
                    k1[(i, j)] += w1 * local_k[a][b] / h;
                    k2[(i, j)] += w2 * local_k[a][b] / h;
                    mass[(i, j)] += local_m[a][b];
                }
            }
        }
        let omega = &k1 + &k2 + mass;
        let psi = DVector::from_element(nodes, h);
        let theta = vec![
            ThetaFn::Affine { offset: 0.0, coeffs: vec![1.0, 0.0] },
            ThetaFn::Affine { offset: 0.0, coeffs: vec![0.0, 1.0] },
        ];
        let placeholder = crate::rb::CoercivityBound::Constant { value: 1.0 };
        let model = AffineEllipticModel::new(2, theta, vec![k1, k2], psi.clone(), psi, omega, placeholder)?;
        let bound = model.min_theta_bound(&[1.0, 1.0])?;
        Ok(Self { model: model.with_coercivity(bound)?, domain })
    }

    pub fn model(&self) -> &AffineEllipticModel {
        &self.model
    }

    pub fn domain(&self) -> &ParameterDomain {
        &self.domain
    }

    pub fn into_parts(self) -> (AffineEllipticModel, ParameterDomain) {
        (self.model, self.domain)
    }
}

impl Model for ToyDiffusionModel {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.model.full_output(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_conductivity_matches_parabola() {
        // u = s(1-s)/(2k); mean = 1/(12k). P1 is nodally exact in 1D.
        let toy = ToyDiffusionModel::default();
        for k in [1.0, 2.5] {
            let u = toy.model().full_solve(&[k, k]).unwrap();
            let h = 1.0 / 65.0;
            for (j, v) in u.iter().enumerate() {
                let s = (j + 1) as f64 * h;
                assert!((v - s * (1.0 - s) / (2.0 * k)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coercivity_bound_is_below_true_constant() {
        let toy = ToyDiffusionModel::default();
        for x in [[1.0, 3.0], [3.0, 1.0], [2.0, 2.0], [1.3, 1.1]] {
            let lb = toy.model().coercivity_lb(&x);
            assert!(lb > 0.0 && lb <= toy.model().coercivity_constant(&x) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rejects_nonpositive_ranges() {
        assert!(ToyDiffusionModel::new(8, vec![(0.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(ToyDiffusionModel::new(8, vec![(1.0, 2.0)]).is_err());
    }
}
