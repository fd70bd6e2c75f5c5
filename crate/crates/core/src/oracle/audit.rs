use crate::cert::SurrogateSample;
use crate::error::{Error, Result};
use crate::rng::{substream, Stream, StreamRole};
use crate::sobol::estimate_sobol;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Largest grid accepted by [`brute_force_bounds`].
pub const BRUTE_FORCE_BUDGET: f64 = 1e7;

/// Index estimate on a stacked vector (y, y') of length 2N.
pub fn psi_ratio(y: &[f64]) -> Result<f64> {
    if y.len() % 2 != 0 {
        return Err(Error::InvalidArgument("stacked sample must have even length".into()));
    }
    let (a, b) = y.split_at(y.len() / 2);
    Ok(estimate_sobol(a, b)?.value)
}

/// Box [lo, hi] per coordinate of the stacked vector.
fn boxes(s: &SurrogateSample) -> Vec<(f64, f64)> {
    let centers = s.ytil().iter().chain(s.ytil_prime());
    let radii = s.eps().iter().chain(s.eps_prime());
    centers.zip(radii).map(|(c, r)| (c - r, c + r)).collect()
}

fn level(b: (f64, f64), j: usize, points: usize) -> f64 {
    if j + 1 == points {
        b.1
    } else {
        b.0 + (b.1 - b.0) * j as f64 / (points - 1) as f64
    }
}

/// Extrema of the index estimate over a tensor grid of the admissible box,
/// endpoints included.
pub fn brute_force_bounds(s: &SurrogateSample, points_per_axis: usize) -> Result<(f64, f64)> {
    if points_per_axis < 2 {
        return Err(Error::InvalidArgument("grid needs at least the two endpoints".into()));
    }
    let b = boxes(s);
    let evaluations = (points_per_axis as f64).powi(b.len() as i32);
    if evaluations > BRUTE_FORCE_BUDGET {
        return Err(Error::TooLarge { evaluations });
    }
    if s.len() < 2 {
        estimate_sobol(s.ytil(), s.ytil_prime())?;
    }
    let total = evaluations as usize;
    let extrema = (0..total)
        .into_par_iter()
        .fold(
            || (f64::INFINITY, f64::NEG_INFINITY, vec![0.0; b.len()]),
            |(lo, hi, mut y), mut code| {
                for (d, bx) in b.iter().enumerate() {
                    y[d] = level(*bx, code % points_per_axis, points_per_axis);
                    code /= points_per_axis;
                }
                match psi_ratio(&y) {
                    Ok(v) => (lo.min(v), hi.max(v), y),
                    Err(_) => (lo, hi, y),
                }
            },
        )
        .map(|(lo, hi, _)| (lo, hi))
        .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    if extrema.0 > extrema.1 {
        return Err(Error::DegenerateSample);
    }
    Ok(extrema)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    /// Random points used to set the initial temperature from the objective spread.
    pub initial_points: usize,
    pub cooling: f64,
    pub steps_per_temperature: usize,
    /// Stop once T < stop_fraction·T₀.
    pub stop_fraction: f64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { initial_points: 50, cooling: 0.95, steps_per_temperature: 200, stop_fraction: 1e-6 }
    }
}

fn draw_in(b: &[(f64, f64)], rng: &mut Stream) -> Vec<f64> {
    b.iter().map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo }).collect()
}

fn chain(b: &[(f64, f64)], sign: f64, start: &[f64], t0: f64, schedule: &AnnealSchedule, mut rng: Stream) -> f64 {
    let objective = |y: &[f64]| psi_ratio(y).ok().map(|v| sign * v);
    let mut current = start.to_vec();
    let mut value = objective(&current).unwrap_or(f64::INFINITY);
    let mut best = value;
    let mut t = t0;
    let mut proposal = current.clone();
    while t >= schedule.stop_fraction * t0 {
        let step = (0.5 * (t / t0).sqrt()).max(1e-4);
        for _ in 0..schedule.steps_per_temperature {
            for (d, &(lo, hi)) in b.iter().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                proposal[d] = (current[d] + z * step * (hi - lo)).clamp(lo, hi);
            }
            let u: f64 = rng.random();
            let Some(candidate) = objective(&proposal) else { continue };
            if candidate <= value || u < (-(candidate - value) / t).exp() {
                std::mem::swap(&mut current, &mut proposal);
                value = candidate;
                best = best.min(value);
            }
        }
        t *= schedule.cooling;
    }
    sign * best
}

/// Best-found (min, max) of the index estimate over the admissible box.
pub fn anneal_bounds(s: &SurrogateSample, schedule: &AnnealSchedule, seed: u64) -> Result<(f64, f64)> {
    if !(schedule.cooling > 0.0 && schedule.cooling < 1.0 && schedule.stop_fraction > 0.0) {
        return Err(Error::InvalidArgument("cooling ratio must lie in (0, 1)".into()));
    }
    let b = boxes(s);
    let center: Vec<f64> = s.ytil().iter().chain(s.ytil_prime()).copied().collect();
    let at_center = psi_ratio(&center)?;
    let mut rng = substream(seed, StreamRole::Annealing, 2);
    let (mut lo, mut hi) = (at_center, at_center);
    for _ in 0..schedule.initial_points {
        if let Ok(v) = psi_ratio(&draw_in(&b, &mut rng)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let t0 = hi - lo;
    if !(t0 > 0.0) {
        return Ok((at_center, at_center));
    }
    let (min, max) = rayon::join(
        || chain(&b, 1.0, &center, t0, schedule, substream(seed, StreamRole::Annealing, 0)),
        || chain(&b, -1.0, &center, t0, schedule, substream(seed, StreamRole::Annealing, 1)),
    );
    Ok((min, max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(eps: f64) -> SurrogateSample {
        SurrogateSample::new(vec![0.1, 0.5, 0.9], vec![0.2, 0.4, 1.0], vec![eps; 3], vec![eps; 3]).unwrap()
    }

    #[test]
    fn psi_matches_estimator() {
        assert_eq!(psi_ratio(&[1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(psi_ratio(&[1.0, 2.0, 3.0, 4.0, 2.0, 2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert!((psi_ratio(&[0.0, 1.0, 2.0, 3.0, 3.0, 2.0, 1.0, 0.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(psi_ratio(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn exact_sample_collapses() {
        let s = tiny(0.0);
        let point = s.point_estimate().unwrap();
        assert_eq!(brute_force_bounds(&s, 5).unwrap(), (point, point));
        assert_eq!(anneal_bounds(&s, &AnnealSchedule::default(), 3).unwrap(), (point, point));
    }

    #[test]
    fn budget_and_degenerate_cases() {
        let big = SurrogateSample::exact(vec![0.0; 12], vec![0.0; 12]).unwrap();
        assert!(matches!(brute_force_bounds(&big, 5), Err(Error::TooLarge { .. })));
        let one = SurrogateSample::new(vec![1.0], vec![2.0], vec![0.1], vec![0.1]).unwrap();
        assert!(brute_force_bounds(&one, 5).is_err());
    }

    #[test]
    fn annealing_is_reproducible_and_inside_grid_hull_approximately() {
        let s = tiny(0.05);
        let a = anneal_bounds(&s, &AnnealSchedule::default(), 11).unwrap();
        assert_eq!(a, anneal_bounds(&s, &AnnealSchedule::default(), 11).unwrap());
        let g = brute_force_bounds(&s, 5).unwrap();
        assert!(a.0 >= g.0 - 1e-3 && a.1 <= g.1 + 1e-3, "{a:?} {g:?}");
        assert!((a.0 - g.0).abs() <= 1e-3 && (a.1 - g.1).abs() <= 1e-3, "{a:?} {g:?}");
    }
}
