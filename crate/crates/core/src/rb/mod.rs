//! Reduced-basis solver for affinely parametrized symmetric coercive problems.

mod compensated;
mod model;
mod pod;
mod reduced;

pub use model::{AffineEllipticModel, CoercivityBound, ThetaFn};
pub use pod::{build_snapshots, pod_basis, pod_spectrum, projection_error, random_parameters, SnapshotSet};
pub use reduced::{offline_reduce, ReducedModel};

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidArgument(format!("{what}: ragged rows")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what}: non-finite entry")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub(crate) fn vector(values: &[f64], what: &str) -> Result<DVector<f64>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what}: non-finite entry")));
    }
    Ok(DVector::from_column_slice(values))
}

pub(crate) fn is_symmetric(m: &DMatrix<f64>) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= 1e-12 * scale))
}

/// Largest |ZᵀΩZ - I| entry.
pub fn gram_deviation(basis: &DMatrix<f64>, omega: &DMatrix<f64>) -> f64 {
    let g = basis.transpose() * omega * basis;
    let n = g.nrows();
    (g - DMatrix::<f64>::identity(n, n)).amax()
}
