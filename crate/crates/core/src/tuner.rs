//! Choice of basis size n and sample size N at minimal cost N·n³ subject to
//! Z/√N + C/aⁿ = P.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningModel {
    /// Sampling constant: interval length due to Monte Carlo error is Z/√N.
    pub z: f64,
    pub c: f64,
    pub a: f64,
}

impl TuningModel {
    pub fn new(z: f64, c: f64, a: f64) -> Result<Self> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidArgument(format!("sampling constant must be positive, got {z}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("decay amplitude must be positive, got {c}")));
        }
        if !(a > 1.0 && a.is_finite()) {
            return Err(Error::NoDecay(a));
        }
        Ok(Self { z, c, a })
    }

    /// Metamodel part of the interval length at basis size n.
    pub fn metamodel_error(&self, n: f64) -> f64 {
        self.c / self.a.powf(n)
    }

    /// Basis size below which the metamodel part alone exceeds P.
    pub fn critical_size(&self, p: f64) -> f64 {
        (self.c / p).ln() / self.a.ln()
    }

    pub fn sample_size(&self, n: f64, p: f64) -> f64 {
        let d = p - self.metamodel_error(n);
        (self.z / d).powi(2)
    }

    pub fn precision(&self, n: f64, big_n: f64) -> f64 {
        self.z / big_n.sqrt() + self.metamodel_error(n)
    }

    /// Same sign as the derivative of ln(n³N) along the constraint, negated.
    fn foc_sign(&self, n: f64, p: f64) -> f64 {
        2.0 * self.c * n * self.a.ln() - 3.0 * (p * self.a.powf(n) - self.c)
    }
}

/// Least-squares fit of ln e = ln C − n ln a.
pub fn fit_error_decay(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pairs.len() < 2 {
        return Err(Error::BadData(format!("need at least 2 pairs, got {}", pairs.len())));
    }
    if let Some(&(n, e)) = pairs.iter().find(|(_, e)| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::BadData(format!("nonpositive error {e} at n = {n}")));
    }
    let m = pairs.len() as f64;
    let nbar = pairs.iter().map(|p| p.0).sum::<f64>() / m;
    let lbar = pairs.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(n, e) in pairs {
        sxy += (n - nbar) * (e.ln() - lbar);
        sxx += (n - nbar) * (n - nbar);
    }
    if sxx == 0.0 {
        return Err(Error::BadData("basis sizes must be distinct".into()));
    }
    let slope = sxy / sxx;
    let c = (lbar - slope * nbar).exp();
    let a = (-slope).exp();
    if !(a > 1.0) {
        return Err(Error::NoDecay(a));
    }
    Ok((c, a))
}

/// Per-index quantities entering the sampling constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexIntervalSummary {
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub lower: f64,
    pub upper: f64,
}

impl IndexIntervalSummary {
    /// Length of the combined interval beyond the bound pair.
    pub fn sampling_part(&self) -> f64 {
        (self.ci_hi - self.upper) + (self.lower - self.ci_lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZEstimate {
    pub z: f64,
    /// Set when the estimate came out negative; the value is kept signed.
    pub negative: bool,
}

pub fn estimate_z(big_n: usize, parts: &[IndexIntervalSummary]) -> Result<ZEstimate> {
    if parts.is_empty() {
        return Err(Error::BadData("no indices".into()));
    }
    if big_n == 0 {
        return Err(Error::DesignTooSmall(big_n));
    }
    let sum: f64 = parts.iter().map(IndexIntervalSummary::sampling_part).sum();
    let z = (big_n as f64).sqrt() / parts.len() as f64 * sum;
    Ok(ZEstimate { z, negative: z < 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bisection {
    /// Bracket from just above the critical size, doubled until the sign
    /// flips, bisected to the given width.
    Converged { tolerance: f64 },
    /// Start at critical size + offset, end at `upper`, stop after a
    /// fixed number of midpoints and return the last one.
    FixedMidpoints { offset: f64, upper: f64, midpoints: usize },
}

impl Default for Bisection {
    fn default() -> Self {
        Bisection::Converged { tolerance: 1e-6 }
    }
}

impl Bisection {
    /// Schedule that reproduces the published tuning table.
    pub fn published() -> Self {
        Bisection::FixedMidpoints { offset: 1.0, upper: 100.0, midpoints: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningSolution {
    pub precision: f64,
    pub n_star: f64,
    pub big_n_star: f64,
    pub n_rounded: u64,
    pub big_n_rounded: u64,
    /// Z/√N + C/aⁿ at the rounded pair.
    pub precision_rounded: f64,
}

impl TuningSolution {
    pub fn cost(&self) -> f64 {
        self.big_n_star * self.n_star.powi(3)
    }
}

pub fn solve_optimal(model: &TuningModel, p: f64) -> Result<TuningSolution> {
    solve_optimal_with(model, p, Bisection::default())
}

fn root(model: &TuningModel, p: f64, schedule: Bisection) -> Result<f64> {
    let nc = model.critical_size(p);
    let limit = 10.0 * nc.max(1.0) + 100.0;
    let positive = |n: f64| model.foc_sign(n, p) > 0.0;
    match schedule {
        Bisection::Converged { tolerance } => {
            let mut lo = nc.max(0.0) + 1e-6;
            if !positive(lo) {
                return Err(Error::NoBracket { limit });
            }
            let mut step = 1.0;
            let mut hi = lo + step;
            while positive(hi) {
                if hi >= limit {
                    return Err(Error::NoBracket { limit });
                }
                lo = hi;
                step *= 2.0;
                hi = (lo + step).min(limit);
            }
            while hi - lo > tolerance {
                let mid = 0.5 * (lo + hi);
                if positive(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
        Bisection::FixedMidpoints { offset, upper, midpoints } => {
            let (mut lo, mut hi) = (nc + offset, upper);
            if !(positive(lo) && !positive(hi)) {
                return Err(Error::NoBracket { limit: upper });
            }
            let mut mid = 0.5 * (lo + hi);
            for _ in 0..midpoints {
                mid = 0.5 * (lo + hi);
                if positive(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(mid)
        }
    }
}

pub fn solve_optimal_with(model: &TuningModel, p: f64, schedule: Bisection) -> Result<TuningSolution> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("target precision must be positive, got {p}")));
    }
    let n_star = root(model, p, schedule)?;
    let big_n_star = model.sample_size(n_star, p);
    let n_rounded = n_star.round() as u64;
    let big_n_rounded = (big_n_star.round() as u64).max(1);
    Ok(TuningSolution {
        precision: p,
        n_star,
        big_n_star,
        n_rounded,
        big_n_rounded,
        precision_rounded: model.precision(n_rounded as f64, big_n_rounded as f64),
    })
}

pub fn tuning_table(model: &TuningModel, precisions: &[f64], schedule: Bisection) -> Result<Vec<TuningSolution>> {
    precisions.iter().map(|&p| solve_optimal_with(model, p, schedule)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn published() -> TuningModel {
        TuningModel::new(2.6407, 197.69, 2.789).unwrap()
    }

    #[test]
    fn exact_exponential_is_recovered() {
        let pairs: Vec<_> = (5..=10).map(|n| (n as f64, 100.0 / 2f64.powi(n))).collect();
        let (c, a) = fit_error_decay(&pairs).unwrap();
        assert!((c - 100.0).abs() <= 1e-10 * 100.0 && (a - 2.0).abs() <= 1e-10);
        let (c, a) = fit_error_decay(&[(7.0, 197.69 / 2.789f64.powi(7)), (12.0, 197.69 / 2.789f64.powi(12))]).unwrap();
        assert!((c - 197.69).abs() <= 1e-6 && (a - 2.789).abs() <= 1e-9);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(fit_error_decay(&[(1.0, 0.5)]), Err(Error::BadData(_))));
        assert!(matches!(fit_error_decay(&[(1.0, 0.5), (2.0, 0.0)]), Err(Error::BadData(_))));
        assert!(matches!(fit_error_decay(&[(1.0, 0.5), (1.0, 0.4)]), Err(Error::BadData(_))));
        assert!(matches!(fit_error_decay(&[(1.0, 0.5), (2.0, 0.6)]), Err(Error::NoDecay(_))));
    }

    #[test]
    fn z_arithmetic() {
        let flat = IndexIntervalSummary { ci_lo: 0.3, ci_hi: 0.5, lower: 0.3, upper: 0.5 };
        assert_eq!(estimate_z(100, &[flat]).unwrap().z, 0.0);
        let one = IndexIntervalSummary { ci_lo: 0.2, ci_hi: 0.75, lower: 0.3, upper: 0.6 };
        assert!((estimate_z(100, &[one]).unwrap().z - 2.5).abs() < 1e-12);
        let a = IndexIntervalSummary { ci_lo: 0.0, ci_hi: 0.6, lower: 0.1, upper: 0.5 };
        let b = IndexIntervalSummary { ci_lo: 0.0, ci_hi: 0.8, lower: 0.1, upper: 0.6 };
        assert!((estimate_z(400, &[a, b]).unwrap().z - 5.0).abs() < 1e-12);
        let bad = IndexIntervalSummary { ci_lo: 0.4, ci_hi: 0.5, lower: 0.3, upper: 0.6 };
        let z = estimate_z(100, &[bad]).unwrap();
        assert!(z.negative && z.z < 0.0);
    }

    #[test]
    fn model_validation() {
        assert!(TuningModel::new(0.0, 1.0, 2.0).is_err());
        assert!(TuningModel::new(1.0, -1.0, 2.0).is_err());
        assert_eq!(TuningModel::new(1.0, 1.0, 1.0), Err(Error::NoDecay(1.0)));
        assert!(solve_optimal(&published(), 0.0).is_err());
    }

    #[test]
    fn published_schedule_matches_table() {
        let rows = [(0.02, 11.1095, 22057.6), (0.005, 12.4437, 354491.0)];
        for (p, n, big_n) in rows {
            let s = solve_optimal_with(&published(), p, Bisection::published()).unwrap();
            assert!((s.n_star - n).abs() / n <= 1e-3, "{s:?}");
            assert!((s.big_n_star - big_n).abs() / big_n <= 1e-3, "{s:?}");
        }
    }

    #[test]
    fn converged_root_is_stationary() {
        let m = published();
        let s = solve_optimal(&m, 0.02).unwrap();
        assert!(m.foc_sign(s.n_star - 1e-5, 0.02) > 0.0 && m.foc_sign(s.n_star + 1e-5, 0.02) < 0.0);
        assert!(s.n_star > m.critical_size(0.02));
        assert!((m.precision(s.n_star, s.big_n_star) - 0.02).abs() <= 1e-9 * 0.02);
        assert_eq!(s.n_rounded, 11);
        assert!((s.precision_rounded - m.precision(11.0, s.big_n_rounded as f64)).abs() < 1e-15);
    }

    #[test]
    fn table_is_vectorized() {
        let m = published();
        assert!(tuning_table(&m, &[], Bisection::default()).unwrap().is_empty());
        let t = tuning_table(&m, &[0.05], Bisection::default()).unwrap();
        assert_eq!(t[0], solve_optimal(&m, 0.05).unwrap());
    }

    #[test]
    fn no_interior_optimum_without_critical_size() {
        // C < P: cost keeps falling as n goes to 0
        let m = TuningModel::new(1.0, 0.01, 3.0).unwrap();
        assert!(matches!(solve_optimal(&m, 0.5), Err(Error::NoBracket { .. })));
    }

    fn cost_along_constraint(m: &TuningModel, n: f64, p: f64) -> f64 {
        m.sample_size(n, p) * n.powi(3)
    }

    proptest! {
        #[test]
        fn optimum_is_monotone_in_precision(
            z in 0.5f64..5.0, c in 10.0f64..500.0, a in 1.5f64..4.0, p in 0.002f64..0.2
        ) {
            let m = TuningModel::new(z, c, a).unwrap();
            let s1 = solve_optimal(&m, p).unwrap();
            let s2 = solve_optimal(&m, p * 1.1).unwrap();
            prop_assert!(s2.n_star <= s1.n_star + 1e-6);
            prop_assert!(s2.big_n_star <= s1.big_n_star * (1.0 + 1e-9));
        }

        #[test]
        fn optimum_is_local_minimum(
            z in 0.5f64..5.0, c in 10.0f64..500.0, a in 1.5f64..4.0, p in 0.002f64..0.2
        ) {
            let m = TuningModel::new(z, c, a).unwrap();
            let s = solve_optimal(&m, p).unwrap();
            prop_assert!((m.precision(s.n_star, s.big_n_star) - p).abs() <= 1e-9 * p);
            let base = cost_along_constraint(&m, s.n_star, p);
            for f in [0.99, 1.01] {
                let n = s.n_star * f;
                if m.metamodel_error(n) < p {
                    let other = cost_along_constraint(&m, n, p);
                    prop_assert!(other >= base * (1.0 - 1e-6));
                }
            }
        }
    }
}
