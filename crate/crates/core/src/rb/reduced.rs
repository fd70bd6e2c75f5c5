use super::compensated::Dd;
use super::{from_rows, gram_deviation, to_rows, vector, AffineEllipticModel, CoercivityBound, ThetaFn};
use crate::domain::{Surrogate, SurrogateEval};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Largest tolerated |ZᵀΩZ - I| entry for an input basis.
pub const BASIS_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    basis: DMatrix<f64>,
    aq_red: Vec<DMatrix<f64>>,
    psi_red: DVector<f64>,
    out_red: DVector<f64>,
    /// Upper factor T with TᵀT the Gram matrix of the Riesz representers of
    /// ψ and of every a_q(ζ_i, ·), held as an unevaluated sum hi + lo.
    riesz_factor: DMatrix<f64>,
    riesz_factor_lo: DMatrix<f64>,
    out_norm: f64,
    residual_scale: f64,
    theta: Vec<ThetaFn>,
    coercivity: CoercivityBound,
}

pub fn offline_reduce(model: &AffineEllipticModel, basis: &DMatrix<f64>) -> Result<ReducedModel> {
    if basis.nrows() != model.dim() || basis.ncols() == 0 {
        return Err(Error::InvalidArgument(format!(
            "basis has shape {:?}, expected {} rows",
            basis.shape(),
            model.dim()
        )));
    }
    let dev = gram_deviation(basis, model.omega());
    if !(dev <= BASIS_TOLERANCE) {
        return Err(Error::BadBasis(dev));
    }
    let zt = basis.transpose();
    let aq_red = model.aq().iter().map(|a| &zt * a * basis).map(|m| (&m + m.transpose()) * 0.5).collect();
    let psi_red = &zt * model.psi();
    let out_red = &zt * model.out();

    let columns = whitened_functionals(model, basis);
    let (riesz_factor, riesz_factor_lo) = upper_factor(&columns);
    let out_white = model.omega_factor().l().solve_lower_triangular(model.out()).ok_or(Error::ReducedAssembly)?;
    Ok(ReducedModel {
        basis: basis.clone(),
        aq_red,
        psi_red,
        out_red,
        residual_scale: riesz_factor.norm(),
        riesz_factor,
        riesz_factor_lo,
        out_norm: out_white.norm(),
        theta: model.theta().to_vec(),
        coercivity: model.coercivity().clone(),
    })
}

/// L⁻¹[ψ, A_q ζ_i] with Ω = LLᵀ, one column per functional, ψ first.
fn whitened_functionals(model: &AffineEllipticModel, basis: &DMatrix<f64>) -> Vec<Vec<Dd>> {
    let dim = model.dim();
    let mut columns = vec![model.psi().iter().map(|&v| Dd::from(v)).collect::<Vec<_>>()];
    for a in model.aq() {
        for i in 0..basis.ncols() {
            let col = (0..dim)
                .map(|j| (0..dim).fold(Dd::ZERO, |acc, k| acc + Dd::prod(a[(j, k)], basis[(k, i)])))
                .collect();
            columns.push(col);
        }
    }
    let l = model.omega_factor().l();
    for col in &mut columns {
        for j in 0..dim {
            let mut v = col[j];
            for k in 0..j {
                v = v - col[k].mul_f64(l[(j, k)]);
            }
            col[j] = v / Dd::from(l[(j, j)]);
        }
    }
    columns
}

fn dot(a: &[Dd], b: &[Dd]) -> Dd {
    a.iter().zip(b).fold(Dd::ZERO, |acc, (x, y)| acc + *x * *y)
}

/// R factor of the columns by modified Gram–Schmidt with one
/// reorthogonalization pass. Dependent columns get a zero diagonal.
fn upper_factor(columns: &[Vec<Dd>]) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = columns.len();
    let mut r = vec![vec![Dd::ZERO; m]; m];
    let mut q: Vec<Vec<Dd>> = Vec::with_capacity(m);
    for (j, col) in columns.iter().enumerate() {
        let mut v = col.clone();
        let start = dot(&v, &v).sqrt();
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = dot(qi, &v);
                for (vk, qk) in v.iter_mut().zip(qi) {
                    *vk = *vk - *qk * c;
                }
                r[i][j] = r[i][j] + c;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm.hi <= 1e-28 * start.hi || norm.hi == 0.0 {
            q.push(vec![Dd::ZERO; v.len()]);
        } else {
            r[j][j] = norm;
            q.push(v.iter().map(|&x| x / norm).collect());
        }
    }
    (
        DMatrix::from_fn(m, m, |i, j| r[i][j].hi),
        DMatrix::from_fn(m, m, |i, j| r[i][j].lo),
    )
}

impl ReducedModel {
    pub fn size(&self) -> usize {
        self.basis.ncols()
    }

    pub fn full_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn aq_red(&self) -> &[DMatrix<f64>] {
        &self.aq_red
    }

    pub fn psi_red(&self) -> &DVector<f64> {
        &self.psi_red
    }

    pub fn out_red(&self) -> &DVector<f64> {
        &self.out_red
    }

    pub fn out_norm(&self) -> f64 {
        self.out_norm
    }

    pub fn riesz_gram(&self) -> DMatrix<f64> {
        let t = &self.riesz_factor + &self.riesz_factor_lo;
        t.transpose() * t
    }

    pub fn coercivity_lb(&self, x: &[f64]) -> f64 {
        self.coercivity.eval(&self.theta, x)
    }

    fn residual_coeffs(&self, x: &[f64], u: &DVector<f64>) -> Vec<Dd> {
        let n = self.size();
        let mut c = vec![Dd::ZERO; 1 + self.theta.len() * n];
        c[0] = Dd::from(1.0);
        for (q, t) in self.theta.iter().enumerate() {
            let th = t.eval(x);
            for i in 0..n {
                c[1 + q * n + i] = -Dd::prod(th, u[i]);
            }
        }
        c
    }

    fn residual_norm_of(&self, c: &[Dd]) -> f64 {
        let m = c.len();
        (0..m)
            .map(|j| {
                (j..m)
                    .fold(Dd::ZERO, |acc, k| {
                        acc + Dd::new(self.riesz_factor[(j, k)], self.riesz_factor_lo[(j, k)]) * c[k]
                    })
                    .to_f64()
                    .powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn online_solve(&self, x: &[f64]) -> Result<DVector<f64>> {
        let n = self.size();
        let mut a = DMatrix::zeros(n, n);
        for (t, aq) in self.theta.iter().zip(&self.aq_red) {
            a += aq * t.eval(x);
        }
        let chol = a.cholesky().ok_or(Error::ReducedAssembly)?;
        Ok(chol.solve(&self.psi_red))
    }

    /// ‖ψ - a(Zu, ·; x)‖ in the dual norm, at cost independent of the full dimension.
    pub fn residual_dual_norm(&self, x: &[f64], u: &DVector<f64>) -> f64 {
        self.residual_norm_of(&self.residual_coeffs(x, u))
    }

    pub fn surrogate_output(&self, x: &[f64]) -> Result<SurrogateEval> {
        let u = self.online_solve(x)?;
        let alpha = self.coercivity_lb(x);
        if !(alpha > 0.0) {
            return Err(Error::BadCoercivityBound(alpha));
        }
        let c = self.residual_coeffs(x, &u);
        let res = self.residual_norm_of(&c);
        let c_norm = c.iter().map(|v| v.hi * v.hi).sum::<f64>().sqrt();
        let rounding = 10.0 * self.full_dim() as f64 * f64::EPSILON * self.residual_scale * c_norm;
        Ok(SurrogateEval { value: self.out_red.dot(&u), bound: self.out_norm * (res + rounding) / alpha })
    }
}

impl Surrogate for ReducedModel {
    fn evaluate(&self, x: &[f64]) -> Result<SurrogateEval> {
        self.surrogate_output(x)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReducedRepr {
    basis: Vec<Vec<f64>>,
    aq_red: Vec<Vec<Vec<f64>>>,
    psi_red: Vec<f64>,
    out_red: Vec<f64>,
    riesz_factor: Vec<Vec<f64>>,
    riesz_factor_lo: Vec<Vec<f64>>,
    out_norm: f64,
    theta: Vec<ThetaFn>,
    coercivity: CoercivityBound,
}

impl Serialize for ReducedModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ReducedRepr {
            basis: to_rows(&self.basis),
            aq_red: self.aq_red.iter().map(to_rows).collect(),
            psi_red: self.psi_red.iter().copied().collect(),
            out_red: self.out_red.iter().copied().collect(),
            riesz_factor: to_rows(&self.riesz_factor),
            riesz_factor_lo: to_rows(&self.riesz_factor_lo),
            out_norm: self.out_norm,
            theta: self.theta.clone(),
            coercivity: self.coercivity.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ReducedModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ReducedRepr::deserialize(d)?;
        let build = || -> Result<Self> {
            let basis = from_rows(&r.basis, "basis")?;
            let n = basis.ncols();
            let aq_red = r.aq_red.iter().map(|m| from_rows(m, "aq_red")).collect::<Result<Vec<_>>>()?;
            let riesz_factor = from_rows(&r.riesz_factor, "riesz_factor")?;
            let riesz_factor_lo = from_rows(&r.riesz_factor_lo, "riesz_factor_lo")?;
            let psi_red = vector(&r.psi_red, "psi_red")?;
            let out_red = vector(&r.out_red, "out_red")?;
            let consistent = n > 0
                && aq_red.len() == r.theta.len()
                && aq_red.iter().all(|m| m.shape() == (n, n))
                && psi_red.len() == n
                && out_red.len() == n
                && riesz_factor.shape() == (1 + r.theta.len() * n, 1 + r.theta.len() * n)
                && riesz_factor_lo.shape() == riesz_factor.shape()
                && r.out_norm.is_finite();
            if !consistent {
                return Err(Error::InvalidArgument("reduced model blocks have inconsistent sizes".into()));
            }
            Ok(ReducedModel {
                basis,
                aq_red,
                psi_red,
                out_red,
                residual_scale: riesz_factor.norm(),
                riesz_factor,
                riesz_factor_lo,
                out_norm: r.out_norm,
                theta: r.theta.clone(),
                coercivity: r.coercivity.clone(),
            })
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
            vec![ThetaFn::Affine { offset: 1.0, coeffs: vec![1.0] }],
            vec![DMatrix::identity(3, 3)],
            DVector::from_column_slice(&[1.0, 2.0, 3.0]),
            DVector::from_column_slice(&[1.0, 1.0, 1.0]),
            DMatrix::identity(3, 3),
            CoercivityBound::MinTheta { reference: vec![0.0], alpha_ref: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn identity_model_reduces_to_identity() {
        let m = identity_model();
        let r = offline_reduce(&m, &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(r.aq_red()[0], DMatrix::identity(3, 3));
        let e = r.surrogate_output(&[0.5]).unwrap();
        assert!((e.value - m.full_output(&[0.5]).unwrap()).abs() < 1e-14);
        assert!(e.bound <= 1e-8 * e.value.abs());
    }

    #[test]
    fn one_dimensional_basis_is_scalar_division() {
        let m = identity_model();
        let z = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let r = offline_reduce(&m, &z).unwrap();
        let u = r.online_solve(&[1.0]).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-15);
        let exact = m.full_output(&[1.0]).unwrap();
        let e = r.surrogate_output(&[1.0]).unwrap();
        assert!((exact - e.value).abs() <= e.bound);
    }

    #[test]
    fn zero_trial_gives_load_norm() {
        let m = identity_model();
        let z = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        let r = offline_reduce(&m, &z).unwrap();
        let norm = r.residual_dual_norm(&[0.0], &DVector::zeros(1));
        assert!((norm - 14f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        let m = identity_model();
        let z = DMatrix::from_column_slice(3, 1, &[2.0, 0.0, 0.0]);
        assert!(matches!(offline_reduce(&m, &z), Err(Error::BadBasis(_))));
    }

    #[test]
    fn nonpositive_coercivity_is_rejected() {
        let m = identity_model();
        let r = offline_reduce(&m, &DMatrix::identity(3, 3)).unwrap();
        assert!(matches!(r.surrogate_output(&[-1.0]), Err(Error::ReducedAssembly)));
        let m = m.with_coercivity(CoercivityBound::Constant { value: 0.0 }).unwrap();
        let r = offline_reduce(&m, &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(r.surrogate_output(&[1.0]), Err(Error::BadCoercivityBound(0.0)));
    }

    #[test]
    fn json_round_trip() {
        let r = offline_reduce(&identity_model(), &DMatrix::identity(3, 2)).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: ReducedModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }
}
