//! Input domain, pick-freeze designs and evaluator contracts.

use crate::cert::SurrogateSample;
use crate::error::{Error, Result};
use crate::rng::{substream, StreamRole};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Box of independent uniform inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct ParameterDomain {
    ranges: Vec<(f64, f64)>,
}

impl ParameterDomain {
    pub fn new(ranges: Vec<(f64, f64)>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::BadDomain("no input variables".into()));
        }
        for (j, &(lo, hi)) in ranges.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::BadDomain(format!(
                    "range {} is [{lo}, {hi}]",
                    j + 1
                )));
            }
        }
        Ok(Self { ranges })
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(&self.ranges)
                .all(|(v, &(lo, hi))| *v >= lo && *v <= hi)
    }

    /// Fills `out` with one uniform draw.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (v, &(lo, hi)) in out.iter_mut().zip(&self.ranges) {
            let u: f64 = rng.random();
            *v = (lo + u * (hi - lo)).min(hi);
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.draw_into(rng, &mut x);
        x
    }
}

impl TryFrom<Vec<(f64, f64)>> for ParameterDomain {
    type Error = Error;
    fn try_from(ranges: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(ranges)
    }
}

impl From<ParameterDomain> for Vec<(f64, f64)> {
    fn from(d: ParameterDomain) -> Self {
        d.ranges
    }
}

/// Two independent N×p draws and the input index whose column is frozen.
///
/// `index` is 1-based. Rows are stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct PickFreezeDesign {
    index: usize,
    rows: usize,
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    seed: u64,
}

pub fn sample_design(
    domain: &ParameterDomain,
    index: usize,
    rows: usize,
    seed: u64,
) -> Result<PickFreezeDesign> {
    if rows < 2 {
        return Err(Error::DesignTooSmall(rows));
    }
    let p = domain.dim();
    if index == 0 || index > p {
        return Err(Error::BadIndex { index, limit: p });
    }
    let fill = |role| {
        let mut rng = substream(seed, role, 0);
        let mut m = vec![0.0; rows * p];
        for row in m.chunks_exact_mut(p) {
            domain.draw_into(&mut rng, row);
        }
        m
    };
    Ok(PickFreezeDesign {
        index,
        rows,
        dim: p,
        a: fill(StreamRole::DesignA),
        b: fill(StreamRole::DesignB),
        seed,
    })
}

impl PickFreezeDesign {
    /// Builds a design from explicit matrices (row-major, `rows × dim`).
    pub fn from_rows(index: usize, dim: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if dim == 0 || a.len() % dim != 0 || a.len() != b.len() {
            return Err(Error::InvalidArgument("design matrices have mismatched shapes".into()));
        }
        let rows = a.len() / dim;
        if rows < 2 {
            return Err(Error::DesignTooSmall(rows));
        }
        if index == 0 || index > dim {
            return Err(Error::BadIndex { index, limit: dim });
        }
        Ok(Self { index, rows, dim, a, b, seed: 0 })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn a_row(&self, k: usize) -> &[f64] {
        &self.a[k * self.dim..(k + 1) * self.dim]
    }

    pub fn b_row(&self, k: usize) -> &[f64] {
        &self.b[k * self.dim..(k + 1) * self.dim]
    }

    /// Same design with another frozen index; the draws are shared.
    pub fn with_index(&self, index: usize) -> Result<Self> {
        if index == 0 || index > self.dim {
            return Err(Error::BadIndex { index, limit: self.dim });
        }
        Ok(Self { index, ..self.clone() })
    }

    /// Row `k` (0-based) as the pair (x, x'), where x' takes coordinate
    /// `index` from x and everything else from the B draw.
    pub fn freeze_inputs(&self, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if k >= self.rows {
            return Err(Error::BadIndex { index: k, limit: self.rows });
        }
        let x = self.a_row(k).to_vec();
        let mut xp = self.b_row(k).to_vec();
        xp[self.index - 1] = x[self.index - 1];
        Ok((x, xp))
    }
}

/// Full model: a scalar output on the parameter domain.
pub trait Model: Sync {
    fn evaluate(&self, x: &[f64]) -> Result<f64>;
}

/// Surrogate value with a certified bound `|f(x) - value| <= bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateEval {
    pub value: f64,
    pub bound: f64,
}

pub trait Surrogate: Sync {
    fn evaluate(&self, x: &[f64]) -> Result<SurrogateEval>;
}

impl<F> Model for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok(self(x))
    }
}

/// Paired full-model outputs (y_k, y'_k).
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub index: usize,
    pub y: Vec<f64>,
    pub y_prime: Vec<f64>,
}

fn evaluate_rows<T, F>(design: &PickFreezeDesign, f: F) -> Result<Vec<(T, T)>>
where
    T: Send,
    F: Fn(&[f64]) -> Result<T> + Sync,
{
    let results: Vec<Result<(T, T)>> = (0..design.rows())
        .into_par_iter()
        .map(|k| {
            let (x, xp) = design.freeze_inputs(k)?;
            let wrap = |e: Error| Error::Evaluation { row: k, message: e.to_string() };
            Ok((f(&x).map_err(wrap)?, f(&xp).map_err(wrap)?))
        })
        .collect();
    results.into_iter().collect()
}

pub fn evaluate_pairs<M: Model + ?Sized>(model: &M, design: &PickFreezeDesign) -> Result<PairedSample> {
    let rows = evaluate_rows(design, |x| model.evaluate(x))?;
    let (y, y_prime) = rows.into_iter().unzip();
    Ok(PairedSample { index: design.index(), y, y_prime })
}

pub fn evaluate_surrogate_pairs<S: Surrogate + ?Sized>(
    surrogate: &S,
    design: &PickFreezeDesign,
) -> Result<SurrogateSample> {
    let rows = evaluate_rows(design, |x| surrogate.evaluate(x))?;
    let mut ytil = Vec::with_capacity(rows.len());
    let mut ytil_prime = Vec::with_capacity(rows.len());
    let mut eps = Vec::with_capacity(rows.len());
    let mut eps_prime = Vec::with_capacity(rows.len());
    for (e, ep) in rows {
        ytil.push(e.value);
        eps.push(e.bound);
        ytil_prime.push(ep.value);
        eps_prime.push(ep.bound);
    }
    SurrogateSample::new(ytil, ytil_prime, eps, eps_prime)
}
