use super::AffineEllipticModel;
use crate::domain::ParameterDomain;
use crate::error::{Error, Result};
use crate::rng::{substream, StreamRole};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

/// Eigenvalues at or below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub params: Vec<Vec<f64>>,
    /// One full solution per column.
    pub snapshots: DMatrix<f64>,
}

pub fn random_parameters(domain: &ParameterDomain, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = substream(seed, StreamRole::Snapshots, 0);
    (0..m).map(|_| domain.draw(&mut rng)).collect()
}

pub fn build_snapshots(model: &AffineEllipticModel, params: &[Vec<f64>]) -> Result<SnapshotSet> {
    if params.is_empty() {
        return Err(Error::InvalidArgument("need at least one snapshot parameter".into()));
    }
    let columns = params
        .par_iter()
        .enumerate()
        .map(|(j, x)| {
            model.full_solve(x).map_err(|e| match e {
                Error::Assembly { .. } => Error::Assembly { param: Some(j) },
                other => other,
            })
        })
        .collect::<Result<Vec<DVector<f64>>>>()?;
    Ok(SnapshotSet { params: params.to_vec(), snapshots: DMatrix::from_columns(&columns) })
}

/// Eigenpairs of SᵀΩS, largest first.
fn sorted_eigen(snapshots: &DMatrix<f64>, omega: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let k = snapshots.transpose() * omega * snapshots;
    let k = (&k + k.transpose()) * 0.5;
    let eig = SymmetricEigen::new(k);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = DMatrix::from_columns(&order.iter().map(|&j| eig.eigenvectors.column(j).into_owned()).collect::<Vec<_>>());
    (values, vectors)
}

/// Eigenvalues of the snapshot correlation matrix, largest first.
pub fn pod_spectrum(snap: &SnapshotSet, omega: &DMatrix<f64>) -> Vec<f64> {
    sorted_eigen(&snap.snapshots, omega).0
}

fn numerical_rank(values: &[f64]) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return 0;
    }
    values.iter().take_while(|&&v| v > RANK_TOLERANCE * top).count()
}

pub fn pod_basis(snap: &SnapshotSet, omega: &DMatrix<f64>, n: usize) -> Result<DMatrix<f64>> {
    let s = &snap.snapshots;
    if omega.shape() != (s.nrows(), s.nrows()) {
        return Err(Error::InvalidArgument("inner product does not match snapshot length".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("basis size must be positive".into()));
    }
    let (values, vectors) = sorted_eigen(s, omega);
    let rank = numerical_rank(&values);
    if n > rank {
        return Err(Error::RankDeficient { requested: n, rank });
    }
    let mut basis = s * vectors.columns(0, n);
    for j in 0..n {
        let mut c = basis.column(j).into_owned();
        let norm = c.dot(&(omega * &c)).sqrt();
        c /= norm;
        basis.set_column(j, &c);
    }
    orthonormalize(&mut basis, omega);
    orthonormalize(&mut basis, omega);
    Ok(basis)
}

/// Ω-Gram–Schmidt in place.
fn orthonormalize(basis: &mut DMatrix<f64>, omega: &DMatrix<f64>) {
    for j in 0..basis.ncols() {
        let mut c = basis.column(j).into_owned();
        for i in 0..j {
            let prev = basis.column(i).into_owned();
            let coef = prev.dot(&(omega * &c));
            c -= prev * coef;
        }
        let norm = c.dot(&(omega * &c)).sqrt();
        basis.set_column(j, &(c / norm));
    }
}

/// Σ_j ‖s_j - Π s_j‖²_Ω for the Ω-orthogonal projection Π onto the basis.
pub fn projection_error(snapshots: &DMatrix<f64>, basis: &DMatrix<f64>, omega: &DMatrix<f64>) -> f64 {
    let coeffs = basis.transpose() * omega * snapshots;
    let diff = snapshots - basis * coeffs;
    (0..diff.ncols())
        .map(|j| {
            let c = diff.column(j);
            c.dot(&(omega * c))
        })
        .sum::<f64>()
        .max(0.0)
}
