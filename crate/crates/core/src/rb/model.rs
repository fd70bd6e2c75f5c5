use super::compensated::Dd;
use super::{from_rows, is_symmetric, to_rows, vector};
use crate::domain::Model;
use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Parameter function Θ_q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaFn {
    Constant { value: f64 },
    /// offset + Σ coeffs_j x_j.
    Affine { offset: f64, coeffs: Vec<f64> },
}

impl ThetaFn {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ThetaFn::Constant { value } => *value,
            ThetaFn::Affine { offset, coeffs } => offset + coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>(),
        }
    }

    fn check(&self, parameters: usize) -> Result<()> {
        let ok = match self {
            ThetaFn::Constant { value } => value.is_finite(),
            ThetaFn::Affine { offset, coeffs } => {
                coeffs.len() == parameters && offset.is_finite() && coeffs.iter().all(|c| c.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("theta function {self:?} does not match {parameters} parameters")))
        }
    }
}

/// Lower bound α̃(x) on the coercivity constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoercivityBound {
    Constant { value: f64 },
    /// min_q Θ_q(x)/Θ_q(x̄) · α(x̄). Valid when every Θ_q is positive and
    /// every A_q positive semidefinite.
    MinTheta { reference: Vec<f64>, alpha_ref: f64 },
}

impl CoercivityBound {
    pub fn eval(&self, theta: &[ThetaFn], x: &[f64]) -> f64 {
        match self {
            CoercivityBound::Constant { value } => *value,
            CoercivityBound::MinTheta { reference, alpha_ref } => {
                let ratio = theta
                    .iter()
                    .map(|t| t.eval(x) / t.eval(reference))
                    .fold(f64::INFINITY, f64::min);
                ratio * alpha_ref
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct AffineEllipticModel {
    parameters: usize,
    theta: Vec<ThetaFn>,
    aq: Vec<DMatrix<f64>>,
    psi: DVector<f64>,
    out: DVector<f64>,
    omega: DMatrix<f64>,
    coercivity: CoercivityBound,
    omega_factor: Cholesky<f64, Dyn>,
}

impl PartialEq for AffineEllipticModel {
    fn eq(&self, other: &Self) -> bool {
        self.parameters == other.parameters
            && self.theta == other.theta
            && self.aq == other.aq
            && self.psi == other.psi
            && self.out == other.out
            && self.omega == other.omega
            && self.coercivity == other.coercivity
    }
}

/// Smallest generalized eigenvalue of `a` against the factored `omega`.
fn min_generalized_eigenvalue(a: &DMatrix<f64>, omega: &Cholesky<f64, Dyn>) -> f64 {
    let l = omega.l();
    let x = l.solve_lower_triangular(a).expect("nonsingular factor");
    let m = l.solve_lower_triangular(&x.transpose()).expect("nonsingular factor");
    let m = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(m).eigenvalues.min()
}

impl AffineEllipticModel {
    pub fn new(
        parameters: usize,
        theta: Vec<ThetaFn>,
        aq: Vec<DMatrix<f64>>,
        psi: DVector<f64>,
        out: DVector<f64>,
        omega: DMatrix<f64>,
        coercivity: CoercivityBound,
    ) -> Result<Self> {
        let dim = psi.len();
        if parameters == 0 {
            return Err(Error::InvalidArgument("model needs at least one parameter".into()));
        }
        if theta.is_empty() || theta.len() != aq.len() {
            return Err(Error::InvalidArgument(format!("{} theta functions for {} matrices", theta.len(), aq.len())));
        }
        for t in &theta {
            t.check(parameters)?;
        }
        if dim == 0 || out.len() != dim {
            return Err(Error::InvalidArgument("load and output vectors must share a positive length".into()));
        }
        for (q, a) in aq.iter().enumerate() {
            if a.shape() != (dim, dim) || !is_symmetric(a) {
                return Err(Error::InvalidArgument(format!("affine matrix {q} is not a symmetric {dim}x{dim} matrix")));
            }
        }
        if omega.shape() != (dim, dim) || !is_symmetric(&omega) {
            return Err(Error::InvalidArgument("inner product matrix is not symmetric".into()));
        }
        let omega_factor = omega
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("inner product matrix is not positive definite".into()))?;
        match &coercivity {
            CoercivityBound::Constant { value } if !value.is_finite() => {
                return Err(Error::BadCoercivityBound(*value));
            }
            CoercivityBound::MinTheta { reference, alpha_ref } => {
                if reference.len() != parameters || !alpha_ref.is_finite() {
                    return Err(Error::InvalidArgument("bad coercivity reference".into()));
                }
                if let Some(t) = theta.iter().find(|t| !(t.eval(reference) > 0.0)) {
                    return Err(Error::InvalidArgument(format!("theta {t:?} not positive at the reference point")));
                }
            }
            _ => {}
        }
        Ok(Self { parameters, theta, aq, psi, out, omega, coercivity, omega_factor })
    }

    /// Builds the min-theta coercivity bound at `reference`.
    pub fn min_theta_bound(&self, reference: &[f64]) -> Result<CoercivityBound> {
        if reference.len() != self.parameters {
            return Err(Error::InvalidArgument("reference point has wrong dimension".into()));
        }
        let a = self.assemble(reference);
        Ok(CoercivityBound::MinTheta {
            reference: reference.to_vec(),
            alpha_ref: min_generalized_eigenvalue(&a, &self.omega_factor),
        })
    }

    pub fn with_coercivity(self, coercivity: CoercivityBound) -> Result<Self> {
        Self::new(self.parameters, self.theta, self.aq, self.psi, self.out, self.omega, coercivity)
    }

    /// Exact coercivity constant at x relative to Ω.
    pub fn coercivity_constant(&self, x: &[f64]) -> f64 {
        min_generalized_eigenvalue(&self.assemble(x), &self.omega_factor)
    }

    pub fn coercivity_lb(&self, x: &[f64]) -> f64 {
        self.coercivity.eval(&self.theta, x)
    }

    pub fn parameters(&self) -> usize {
        self.parameters
    }

    pub fn dim(&self) -> usize {
        self.psi.len()
    }

    pub fn terms(&self) -> usize {
        self.aq.len()
    }

    pub fn theta(&self) -> &[ThetaFn] {
        &self.theta
    }

    pub fn aq(&self) -> &[DMatrix<f64>] {
        &self.aq
    }

    pub fn psi(&self) -> &DVector<f64> {
        &self.psi
    }

    pub fn out(&self) -> &DVector<f64> {
        &self.out
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn coercivity(&self) -> &CoercivityBound {
        &self.coercivity
    }

    pub(crate) fn omega_factor(&self) -> &Cholesky<f64, Dyn> {
        &self.omega_factor
    }

    pub fn thetas(&self, x: &[f64]) -> Vec<f64> {
        self.theta.iter().map(|t| t.eval(x)).collect()
    }

    pub fn assemble(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut a = DMatrix::zeros(n, n);
        for (t, aq) in self.theta.iter().zip(&self.aq) {
            a += aq * t.eval(x);
        }
        a
    }

    pub fn full_solve(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.parameters {
            return Err(Error::InvalidArgument(format!("expected {} parameters, got {}", self.parameters, x.len())));
        }
        let chol = self.assemble(x).cholesky().ok_or(Error::Assembly { param: None })?;
        Ok(chol.solve(&self.psi))
    }

    pub fn full_output(&self, x: &[f64]) -> Result<f64> {
        Ok(self.out.dot(&self.full_solve(x)?))
    }

    /// ψ - A(x)u, as a vector of functionals on the basis functions.
    pub fn residual(&self, x: &[f64], u: &DVector<f64>) -> DVector<f64> {
        &self.psi - self.assemble(x) * u
    }

    /// Dual norm of the residual of the trial function Zu, assembled in
    /// full space with compensated sums.
    pub fn residual_dual_norm(&self, x: &[f64], basis: &DMatrix<f64>, u: &DVector<f64>) -> f64 {
        let dim = self.dim();
        let v: Vec<Dd> = (0..dim)
            .map(|j| (0..u.len()).fold(Dd::ZERO, |acc, i| acc + Dd::prod(basis[(j, i)], u[i])))
            .collect();
        let thetas = self.thetas(x);
        let rho = DVector::from_fn(dim, |j, _| {
            let mut acc = Dd::from(self.psi[j]);
            for (th, a) in thetas.iter().zip(&self.aq) {
                let av = (0..dim).fold(Dd::ZERO, |s, k| s + v[k].mul_f64(a[(j, k)]));
                acc = acc - av.mul_f64(*th);
            }
            acc.to_f64()
        });
        self.dual_norm(&rho)
    }

    /// √(ρᵀΩ⁻¹ρ).
    pub fn dual_norm(&self, rho: &DVector<f64>) -> f64 {
        rho.dot(&self.omega_factor.solve(rho)).max(0.0).sqrt()
    }
}

impl Model for AffineEllipticModel {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.full_output(x)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRepr {
    parameters: usize,
    theta: Vec<ThetaFn>,
    aq: Vec<Vec<Vec<f64>>>,
    psi: Vec<f64>,
    out: Vec<f64>,
    omega: Vec<Vec<f64>>,
    coercivity: CoercivityBound,
}

impl Serialize for AffineEllipticModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelRepr {
            parameters: self.parameters,
            theta: self.theta.clone(),
            aq: self.aq.iter().map(to_rows).collect(),
            psi: self.psi.iter().copied().collect(),
            out: self.out.iter().copied().collect(),
            omega: to_rows(&self.omega),
            coercivity: self.coercivity.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AffineEllipticModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ModelRepr::deserialize(d)?;
        let build = || -> Result<Self> {
            let aq = r.aq.iter().map(|m| from_rows(m, "aq")).collect::<Result<Vec<_>>>()?;
            Self::new(
                r.parameters,
                r.theta.clone(),
                aq,
                vector(&r.psi, "psi")?,
                vector(&r.out, "out")?,
                from_rows(&r.omega, "omega")?,
                r.coercivity.clone(),
            )
        };
        build().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_model() -> AffineEllipticModel {
        AffineEllipticModel::new(
            1,
            vec![ThetaFn::Constant { value: 1.0 }],
            vec![DMatrix::identity(3, 3)],
            DVector::from_column_slice(&[1.0, 0.0, 0.0]),
            DVector::from_column_slice(&[1.0, 1.0, 1.0]),
            DMatrix::identity(3, 3),
            CoercivityBound::Constant { value: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn identity_system() {
        let u = identity_model().full_solve(&[0.3]).unwrap();
        assert_eq!(u.as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn cramer_two_by_two() {
        // A(x) = x·[[2,1],[1,3]] + [[1,0],[0,1]]
        let m = AffineEllipticModel::new(
            1,
            vec![ThetaFn::Affine { offset: 0.0, coeffs: vec![1.0] }, ThetaFn::Constant { value: 1.0 }],
            vec![DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]), DMatrix::identity(2, 2)],
            DVector::from_column_slice(&[1.0, 2.0]),
            DVector::from_column_slice(&[1.0, 0.0]),
            DMatrix::identity(2, 2),
            CoercivityBound::Constant { value: 1.0 },
        )
        .unwrap();
        let x = 2.0;
        let (a, b, c, d) = (5.0, 2.0, 2.0, 7.0);
        let det = a * d - b * c;
        let u = m.full_solve(&[x]).unwrap();
        assert!((u[0] - (1.0 * d - b * 2.0) / det).abs() < 1e-14);
        assert!((u[1] - (a * 2.0 - c * 1.0) / det).abs() < 1e-14);
    }

    #[test]
    fn indefinite_assembly_fails() {
        let m = AffineEllipticModel::new(
            1,
            vec![ThetaFn::Affine { offset: 0.0, coeffs: vec![1.0] }],
            vec![DMatrix::identity(2, 2)],
            DVector::from_column_slice(&[1.0, 1.0]),
            DVector::from_column_slice(&[1.0, 1.0]),
            DMatrix::identity(2, 2),
            CoercivityBound::Constant { value: 1.0 },
        )
        .unwrap();
        assert_eq!(m.full_solve(&[-1.0]), Err(Error::Assembly { param: None }));
    }

    #[test]
    fn rejects_malformed_input() {
        let bad = AffineEllipticModel::new(
            1,
            vec![ThetaFn::Constant { value: 1.0 }],
            vec![DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])],
            DVector::from_column_slice(&[1.0, 1.0]),
            DVector::from_column_slice(&[1.0, 1.0]),
            DMatrix::identity(2, 2),
            CoercivityBound::Constant { value: 1.0 },
        );
        assert!(bad.is_err());
        let bad_omega = AffineEllipticModel::new(
            1,
            vec![ThetaFn::Constant { value: 1.0 }],
            vec![DMatrix::identity(2, 2)],
            DVector::from_column_slice(&[1.0, 1.0]),
            DVector::from_column_slice(&[1.0, 1.0]),
            -DMatrix::<f64>::identity(2, 2),
            CoercivityBound::Constant { value: 1.0 },
        );
        assert!(bad_omega.is_err());
    }

    #[test]
    fn min_theta_bound_at_reference_is_exact() {
        let m = AffineEllipticModel::new(
            2,
            vec![
                ThetaFn::Affine { offset: 0.0, coeffs: vec![1.0, 0.0] },
                ThetaFn::Affine { offset: 0.0, coeffs: vec![0.0, 1.0] },
            ],
            vec![DMatrix::from_diagonal_element(2, 2, 1.0), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0])],
            DVector::from_column_slice(&[1.0, 1.0]),
            DVector::from_column_slice(&[1.0, 1.0]),
            DMatrix::identity(2, 2),
            CoercivityBound::Constant { value: 1.0 },
        )
        .unwrap();
        let bound = m.min_theta_bound(&[1.0, 1.0]).unwrap();
        let m = m.with_coercivity(bound).unwrap();
        assert!((m.coercivity_lb(&[1.0, 1.0]) - 2.0).abs() < 1e-12);
        for x in [[0.5, 2.0], [3.0, 0.2], [1.5, 1.5]] {
            assert!(m.coercivity_lb(&x) <= m.coercivity_constant(&x) + 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let m = identity_model();
        let s = serde_json::to_string(&m).unwrap();
        let back: AffineEllipticModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<AffineEllipticModel>(&s.replace("\"psi\"", "\"extra\":1,\"psi\"")).is_err());
    }
}
