//! Brackets on the full-model index estimate from surrogate outputs.
//!
//! Given surrogate values ỹ, ỹ' and bounds ε, ε' with |y_k - ỹ_k| ≤ ε_k and
//! |y'_k - ỹ'_k| ≤ ε'_k, [`bound_pair`] returns `lower ≤ Ŝ(y, y') ≤ upper`
//! for every admissible (y, y').
//!
//! Two local rules are available at each point (μ, μ') of the mean grid:
//!
//! * [`BoundMethod::Enclosure`] (default) encloses Σ(y-μ)² and
//!   Σ(y-μ)(y'-μ') coefficient by coefficient and divides the interval
//!   endpoints. The μ axis is covered by inflating every ε_k by half the grid
//!   spacing, so the bracket holds for the unknown true mean as well.
//! * [`BoundMethod::ThreeNodeFit`] fits the lower and upper residual
//!   envelopes R_inf(a), R_sup(a) with quadratics through three slopes and
//!   combines their minimizers. It is sharper but the envelopes are only
//!   piecewise quadratic, and the result can miss admissible estimates.

use crate::error::{Error, Result};
use crate::sobol::{is_degenerate, ratio};

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateSample {
    ytil: Vec<f64>,
    ytil_prime: Vec<f64>,
    eps: Vec<f64>,
    eps_prime: Vec<f64>,
}

impl SurrogateSample {
    pub fn new(ytil: Vec<f64>, ytil_prime: Vec<f64>, eps: Vec<f64>, eps_prime: Vec<f64>) -> Result<Self> {
        let n = ytil.len();
        if ytil_prime.len() != n || eps.len() != n || eps_prime.len() != n {
            return Err(Error::InvalidArgument("surrogate sample columns differ in length".into()));
        }
        if n == 0 {
            return Err(Error::DesignTooSmall(0));
        }
        if ytil.iter().chain(&ytil_prime).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("surrogate values must be finite".into()));
        }
        if eps.iter().chain(&eps_prime).any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::InvalidArgument("error bounds must be finite and nonnegative".into()));
        }
        Ok(Self { ytil, ytil_prime, eps, eps_prime })
    }

    /// Sample with all bounds zero.
    pub fn exact(y: Vec<f64>, y_prime: Vec<f64>) -> Result<Self> {
        let n = y.len();
        Self::new(y, y_prime, vec![0.0; n], vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.ytil.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ytil.is_empty()
    }

    pub fn ytil(&self) -> &[f64] {
        &self.ytil
    }

    pub fn ytil_prime(&self) -> &[f64] {
        &self.ytil_prime
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn eps_prime(&self) -> &[f64] {
        &self.eps_prime
    }

    pub fn is_exact(&self) -> bool {
        self.eps.iter().chain(&self.eps_prime).all(|&e| e == 0.0)
    }

    /// Rows listed in `indices`, with each quadruple kept intact.
    pub fn resample(&self, indices: &[usize]) -> Self {
        let pick = |v: &[f64]| indices.iter().map(|&k| v[k]).collect::<Vec<_>>();
        Self {
            ytil: pick(&self.ytil),
            ytil_prime: pick(&self.ytil_prime),
            eps: pick(&self.eps),
            eps_prime: pick(&self.eps_prime),
        }
    }

    /// Replaces the bounds, keeping the values.
    pub fn with_bounds(&self, eps: Vec<f64>, eps_prime: Vec<f64>) -> Result<Self> {
        Self::new(self.ytil.clone(), self.ytil_prime.clone(), eps, eps_prime)
    }

    /// Index estimate on the surrogate values alone.
    pub fn point_estimate(&self) -> Result<f64> {
        ratio(&self.ytil, &self.ytil_prime)
    }

    pub fn mean_boxes(&self) -> MeanBoxes {
        let n = self.len() as f64;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
        let (m, mp) = (mean(&self.ytil), mean(&self.ytil_prime));
        let (e, ep) = (mean(&self.eps), mean(&self.eps_prime));
        MeanBoxes {
            mean: Interval { lo: m - e, hi: m + e },
            mean_prime: Interval { lo: mp - ep, hi: mp + ep },
            center: (m, mp),
            radius: (e, ep),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Boxes holding the sample means of any admissible y and y'.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanBoxes {
    pub mean: Interval,
    pub mean_prime: Interval,
    center: (f64, f64),
    radius: (f64, f64),
}

/// Extrema of t² over t ∈ [m - r, m + r].
pub fn box_square_extrema(m: f64, r: f64) -> (f64, f64) {
    let a = m.abs();
    let lo = (a - r).max(0.0);
    (lo * lo, (a + r) * (a + r))
}

/// Lower and upper envelopes of R(a) = Σ (y'_k - μ' - a(y_k - μ))² over the boxes.
pub fn r_inf_sup_at(a: f64, s: &SurrogateSample, mu: f64, mu_prime: f64) -> (f64, f64) {
    let mut inf = 0.0;
    let mut sup = 0.0;
    for k in 0..s.len() {
        let m = s.ytil_prime[k] - a * (s.ytil[k] - mu) - mu_prime;
        let r = s.eps_prime[k] + a.abs() * s.eps[k];
        let (i, u) = box_square_extrema(m, r);
        inf += i;
        sup += u;
    }
    (inf, sup)
}

/// α a² + β a + γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl QuadCoeffs {
    pub fn eval(&self, a: f64) -> f64 {
        (self.alpha * a + self.beta) * a + self.gamma
    }
}

/// Quadratic through three points (Newton divided differences).
pub fn fit_quadratic(nodes: [f64; 3], values: [f64; 3]) -> Result<QuadCoeffs> {
    let [x0, x1, x2] = nodes;
    if !nodes.iter().all(|v| v.is_finite()) || x0 == x1 || x1 == x2 || x0 == x2 {
        return Err(Error::BadNodes);
    }
    let [v0, v1, v2] = values;
    let d01 = (v1 - v0) / (x1 - x0);
    let d12 = (v2 - v1) / (x2 - x1);
    let d012 = (d12 - d01) / (x2 - x0);
    Ok(QuadCoeffs {
        alpha: d012,
        beta: d01 - d012 * (x0 + x1),
        gamma: v0 - d01 * x0 + d012 * x0 * x1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
}

impl BoundPair {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Settings of the three-slope quadratic fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeNodeFit {
    /// Relative disagreement allowed at the fourth (validation) slope.
    /// `f64::INFINITY` turns the check off.
    pub tolerance: f64,
}

impl Default for ThreeNodeFit {
    fn default() -> Self {
        Self { tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBound {
    pub lower: f64,
    pub upper: f64,
    /// Largest relative misfit of the two quadratics at the validation slope.
    pub fit_deviation: f64,
}

fn relative_gap(fitted: f64, actual: f64) -> f64 {
    let diff = (fitted - actual).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / actual.abs().max(f64::MIN_POSITIVE)
    }
}

/// Local bracket at (μ, μ') from quadratic fits of R_inf and R_sup at slopes
/// {0, s, 2s}, s = max(1, |Ŝ̃|), validated at s/2.
pub fn bound_pair_at(s: &SurrogateSample, mu: f64, mu_prime: f64, fit: &ThreeNodeFit) -> Result<LocalBound> {
    let step = s.point_estimate()?.abs().max(1.0);
    let nodes = [0.0, step, 2.0 * step];
    let env: Vec<(f64, f64)> = nodes.iter().map(|&a| r_inf_sup_at(a, s, mu, mu_prime)).collect();
    let inf = fit_quadratic(nodes, [env[0].0, env[1].0, env[2].0])?;
    let sup = fit_quadratic(nodes, [env[0].1, env[1].1, env[2].1])?;

    let probe = 0.5 * step;
    let (pi, ps) = r_inf_sup_at(probe, s, mu, mu_prime);
    let deviation = relative_gap(inf.eval(probe), pi).max(relative_gap(sup.eval(probe), ps));
    if deviation > fit.tolerance {
        return Err(Error::NonQuadraticRegime { deviation });
    }
    if !(inf.alpha > 0.0) {
        return Err(Error::BoundUnavailable);
    }
    let delta = 2.0 * ((inf.alpha - sup.alpha) * (inf.gamma - sup.gamma)).max(0.0).sqrt();
    Ok(LocalBound {
        lower: -(inf.beta + delta) / (2.0 * inf.alpha),
        upper: -(sup.beta - delta) / (2.0 * sup.alpha),
        fit_deviation: deviation,
    })
}

/// Interval of Σ (y_k - μ)² and Σ (y_k - μ)(y'_k - μ') over the boxes, with
/// every ε_k widened by `inflation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumEnclosure {
    pub square: Interval,
    pub cross: Interval,
}

fn square_enclosure(s: &SurrogateSample, mu: f64, inflation: f64, centered: &mut Vec<f64>, radius: &mut Vec<f64>) -> Interval {
    centered.clear();
    radius.clear();
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (y, e) in s.ytil.iter().zip(&s.eps) {
        let c = y - mu;
        let r = e + inflation;
        let (l, h) = box_square_extrema(c, r);
        lo += l;
        hi += h;
        centered.push(c);
        radius.push(r);
    }
    Interval { lo, hi }
}

fn smaller(a: f64, b: f64) -> f64 {
    if a < b {
        a
    } else {
        b
    }
}

fn larger(a: f64, b: f64) -> f64 {
    if a > b {
        a
    } else {
        b
    }
}

fn cross_enclosure(s: &SurrogateSample, mu_prime: f64, centered: &[f64], radius: &[f64]) -> Interval {
    let n = centered.len();
    let (yp, ep) = (&s.ytil_prime[..n], &s.eps_prime[..n]);
    let (radius, mut lo, mut hi) = (&radius[..n], 0.0, 0.0);
    for k in 0..n {
        let (c, r) = (centered[k], radius[k]);
        let d = yp[k] - mu_prime;
        let rp = ep[k];
        let p1 = (c - r) * (d - rp);
        let p2 = (c - r) * (d + rp);
        let p3 = (c + r) * (d - rp);
        let p4 = (c + r) * (d + rp);
        lo += smaller(smaller(p1, p2), smaller(p3, p4));
        hi += larger(larger(p1, p2), larger(p3, p4));
    }
    Interval { lo, hi }
}

pub fn sum_enclosure(s: &SurrogateSample, mu: f64, mu_prime: f64, inflation: f64) -> SumEnclosure {
    let (mut c, mut r) = (Vec::new(), Vec::new());
    let square = square_enclosure(s, mu, inflation, &mut c, &mut r);
    let cross = cross_enclosure(s, mu_prime, &c, &r);
    SumEnclosure { square, cross }
}

fn divide(cross: Interval, square: Interval) -> (f64, f64) {
    let lower = cross.lo / if cross.lo >= 0.0 { square.hi } else { square.lo };
    let upper = cross.hi / if cross.hi >= 0.0 { square.lo } else { square.hi };
    (lower, upper)
}

/// Local bracket from the coefficient enclosure. Fails when the lower end of
/// the square-sum interval does not clear the zero-variance floor.
pub fn enclosure_at(s: &SurrogateSample, mu: f64, mu_prime: f64, inflation: f64) -> Result<(f64, f64)> {
    let e = sum_enclosure(s, mu, mu_prime, inflation);
    if is_degenerate(&s.ytil, e.square.lo) {
        return Err(Error::BoundUnavailable);
    }
    Ok(divide(e.cross, e.square))
}

/// Tensor grid over the mean boxes. Each axis has an odd number of points,
/// endpoints and center included; an axis of zero width collapses to its center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuGrid {
    points_per_axis: usize,
}

impl MuGrid {
    pub fn new(points_per_axis: usize) -> Result<Self> {
        if points_per_axis < 3 || points_per_axis % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid needs an odd number of points per axis (at least 3), got {points_per_axis}"
            )));
        }
        Ok(Self { points_per_axis })
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    fn axis(&self, center: f64, radius: f64) -> Vec<f64> {
        if radius == 0.0 {
            return vec![center];
        }
        let g = self.points_per_axis;
        let half = (g - 1) / 2;
        (0..g)
            .map(|j| {
                if j == half {
                    center
                } else {
                    center + radius * (j as f64 - half as f64) / half as f64
                }
            })
            .collect()
    }

    /// Mean values on the first axis and the second axis.
    pub fn points(&self, boxes: &MeanBoxes) -> (Vec<f64>, Vec<f64>) {
        (
            self.axis(boxes.center.0, boxes.radius.0),
            self.axis(boxes.center.1, boxes.radius.1),
        )
    }

    /// Half the spacing of the first axis: every mean in the box lies this
    /// close to some grid value.
    pub fn coverage_radius(&self, boxes: &MeanBoxes) -> f64 {
        boxes.radius.0 / (self.points_per_axis - 1) as f64
    }
}

impl Default for MuGrid {
    fn default() -> Self {
        Self { points_per_axis: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BoundMethod {
    #[default]
    Enclosure,
    ThreeNodeFit(ThreeNodeFit),
}

/// Outward rounding allowance for a bracket end computed from n-term sums.
fn rounding_margin(n: usize, v: f64) -> f64 {
    n as f64 * f64::EPSILON * (v.abs() + 1.0)
}

pub fn bound_pair(s: &SurrogateSample, grid: &MuGrid, method: &BoundMethod) -> Result<BoundPair> {
    let boxes = s.mean_boxes();
    let (mus, mu_primes) = grid.points(&boxes);
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    match method {
        BoundMethod::Enclosure => {
            let inflation = grid.coverage_radius(&boxes);
            let (mut c, mut r) = (Vec::with_capacity(s.len()), Vec::with_capacity(s.len()));
            for &mu in &mus {
                // every μ cell must be certified, otherwise the true mean may sit in a gap
                let square = square_enclosure(s, mu, inflation, &mut c, &mut r);
                if is_degenerate(&s.ytil, square.lo) {
                    return Err(Error::BoundUnavailable);
                }
                for &mup in &mu_primes {
                    let (l, u) = divide(cross_enclosure(s, mup, &c, &r), square);
                    lower = lower.min(l);
                    upper = upper.max(u);
                }
            }
        }
        BoundMethod::ThreeNodeFit(fit) => {
            let mut any = false;
            for &mu in &mus {
                for &mup in &mu_primes {
                    match bound_pair_at(s, mu, mup, fit) {
                        Ok(b) => {
                            any = true;
                            lower = lower.min(b.lower);
                            upper = upper.max(b.upper);
                        }
                        Err(Error::BoundUnavailable) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            if !any {
                return Err(Error::BoundUnavailable);
            }
        }
    }
    if !s.is_exact() {
        lower -= rounding_margin(s.len(), lower);
        upper += rounding_margin(s.len(), upper);
    }
    Ok(BoundPair { lower, upper })
}
