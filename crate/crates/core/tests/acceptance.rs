//! Acceptance criteria, one line each. Pass criterion numbers as arguments
//! to run a subset.

use certisens::cert::SurrogateSample;
use certisens::combined::{combined_interval, CombinedConfig};
use certisens::domain::{evaluate_pairs, evaluate_surrogate_pairs, sample_design};
use certisens::oracle::{anneal_bounds, brute_force_bounds, AnnealSchedule, LinearTestModel, SyntheticSurrogate, ToyDiffusionModel};
use certisens::rb::{build_snapshots, offline_reduce, pod_basis, random_parameters, ReducedModel};
use certisens::rng::{substream, Stream, StreamRole};
use certisens::sobol::{bc_interval, bootstrap_replicates, estimate_sobol};
use certisens::tuner::{solve_optimal, solve_optimal_with, Bisection, TuningModel};
use certisens::{bound_pair, BoundMethod, MuGrid};
use rand::Rng;
use std::time::Instant;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn random_instance(rng: &mut Stream, n: usize, eps_scale: f64) -> SurrogateSample {
    let mut y = Vec::with_capacity(n);
    let mut yp = Vec::with_capacity(n);
    let weight: f64 = rng.random();
    for _ in 0..n {
        let shared: f64 = rng.random();
        y.push(shared + rng.random::<f64>());
        yp.push(shared + (1.0 - weight) * rng.random::<f64>() - 0.5 * weight * shared);
    }
    let e = (0..n).map(|_| eps_scale * rng.random::<f64>()).collect();
    let ep = (0..n).map(|_| eps_scale * rng.random::<f64>()).collect();
    SurrogateSample::new(y, yp, e, ep).unwrap()
}

fn admissible(s: &SurrogateSample, rng: &mut Stream, vertex: bool, y: &mut [f64], yp: &mut [f64]) {
    for k in 0..s.len() {
        let (u, v) = if vertex {
            (if rng.random::<bool>() { 1.0 } else { -1.0 }, if rng.random::<bool>() { 1.0 } else { -1.0 })
        } else {
            (2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0)
        };
        y[k] = s.ytil()[k] + u * s.eps()[k];
        yp[k] = s.ytil_prime()[k] + v * s.eps_prime()[k];
    }
}

const PUBLISHED_ROWS: [(f64, f64, f64); 5] = [
    (0.005, 12.4437, 354491.0),
    (0.02, 11.1095, 22057.6),
    (0.05, 10.0501, 3698.95),
    (0.08, 9.59689, 1442.7),
    (0.09, 9.48332, 1139.47),
];

fn tuner_table() -> Verdict {
    let m = TuningModel::new(2.6407, 197.69, 2.789).unwrap();
    let mut worst: f64 = 0.0;
    let mut converged_gap: f64 = 0.0;
    for (p, n, big_n) in PUBLISHED_ROWS {
        let s = solve_optimal_with(&m, p, Bisection::published()).unwrap();
        worst = worst.max(((s.n_star - n) / n).abs()).max(((s.big_n_star - big_n) / big_n).abs());
        let c = solve_optimal(&m, p).unwrap();
        converged_gap = converged_gap.max(((c.big_n_star - big_n) / big_n).abs());
    }
    verdict(
        worst <= 1e-3,
        format!("max relative deviation {worst:.2e} (tolerance 1e-3); converged root differs by up to {converged_gap:.2e} in N"),
    )
}

fn containment() -> Verdict {
    let mut rng = substream(2024, StreamRole::DesignA, 0);
    let mut violations = 0usize;
    let mut unavailable = 0usize;
    let mut checked = 0usize;
    for inst in 0..100 {
        let n = [10, 100, 1000][inst % 3];
        let scale = 0.001 + 0.04 * rng.random::<f64>();
        let s = random_instance(&mut rng, n, scale);
        let Ok(bp) = bound_pair(&s, &MuGrid::default(), &BoundMethod::default()) else {
            unavailable += 1;
            continue;
        };
        let (mut y, mut yp) = (vec![0.0; n], vec![0.0; n]);
        for d in 0..10_000 {
            admissible(&s, &mut rng, d % 2 == 1, &mut y, &mut yp);
            let v = estimate_sobol(&y, &yp).unwrap().value;
            checked += 1;
            if !(bp.lower <= v && v <= bp.upper) {
                violations += 1;
            }
        }
    }
    verdict(
        violations == 0 && unavailable == 0,
        format!("{violations} violations in {checked} draws, {unavailable} instances without a bound"),
    )
}

fn degeneracy() -> Verdict {
    let mut rng = substream(33, StreamRole::DesignA, 0);
    let mut max_width: f64 = 0.0;
    let mut max_diff: f64 = 0.0;
    for seed in 0..5u64 {
        let s = random_instance(&mut rng, 400, 0.0);
        let bp = bound_pair(&s, &MuGrid::default(), &BoundMethod::default()).unwrap();
        max_width = max_width.max(bp.width());
        let cfg = CombinedConfig { seed, ..CombinedConfig::default() };
        let ci = combined_interval(&s, &cfg).unwrap();
        let reps = bootstrap_replicates(s.ytil(), s.ytil_prime(), cfg.replicates, seed).unwrap();
        let plain = bc_interval(&reps.values, s.point_estimate().unwrap(), cfg.alpha).unwrap();
        max_diff = max_diff.max((ci.lo - plain.lo).abs()).max((ci.hi - plain.hi).abs());
    }
    verdict(
        max_width <= 1e-10 && max_diff <= 1e-10,
        format!("max bracket width {max_width:.1e}, max endpoint gap to plain interval {max_diff:.1e}"),
    )
}

fn exhaustive_audit() -> Verdict {
    let mut rng = substream(404, StreamRole::DesignA, 0);
    let mut ok = true;
    let mut worst_anneal: f64 = 0.0;
    let mut slack = Vec::new();
    let mut done = 0;
    while done < 20 {
        let s = random_instance(&mut rng, 3, 0.03);
        let Ok(bp) = bound_pair(&s, &MuGrid::default(), &BoundMethod::default()) else { continue };
        done += 1;
        let (gmin, gmax) = brute_force_bounds(&s, 5).unwrap();
        let (amin, amax) = anneal_bounds(&s, &AnnealSchedule::default(), done as u64).unwrap();
        ok &= bp.lower <= gmin && bp.upper >= gmax;
        ok &= amin >= gmin - 1e-3 && amax <= gmax + 1e-3;
        worst_anneal = worst_anneal.max(gmin - amin).max(amax - gmax);
        slack.push(bp.width() / (amax - amin));
    }
    slack.sort_by(f64::total_cmp);
    verdict(
        ok,
        format!(
            "20 instances; annealed overshoot {worst_anneal:.1e}; bracket/annealed width ratio median {:.2}, max {:.2}",
            slack[slack.len() / 2],
            slack[slack.len() - 1]
        ),
    )
}

fn toy_reduced(toy: &ToyDiffusionModel, sizes: std::ops::RangeInclusive<usize>) -> Vec<ReducedModel> {
    let snap = build_snapshots(toy.model(), &random_parameters(toy.domain(), 30, 1)).unwrap();
    sizes
        .map(|n| offline_reduce(toy.model(), &pod_basis(&snap, toy.model().omega(), n).unwrap()).unwrap())
        .collect()
}

fn rb_certification() -> Verdict {
    let toy = ToyDiffusionModel::default();
    let mut rng = substream(5, StreamRole::DesignA, 0);
    let mut violations = 0;
    let mut worst_rel: f64 = 0.0;
    for red in toy_reduced(&toy, 1..=6) {
        for _ in 0..1000 {
            let x = toy.domain().draw(&mut rng);
            let e = red.surrogate_output(&x).unwrap();
            if (toy.model().full_output(&x).unwrap() - e.value).abs() > e.bound {
                violations += 1;
            }
            let u = red.online_solve(&x).unwrap();
            let reference = toy.model().residual_dual_norm(&x, red.basis(), &u);
            let fast = red.residual_dual_norm(&x, &u);
            worst_rel = worst_rel.max((fast - reference).abs() / reference);
        }
    }
    verdict(
        violations == 0 && worst_rel <= 1e-8,
        format!("{violations} violations in 6000 points; max relative dual-norm mismatch {worst_rel:.1e} (tolerance 1e-8)"),
    )
}

fn in_band(hits: usize, runs: usize) -> bool {
    let rate = hits as f64 / runs as f64;
    (0.90..=0.99).contains(&rate)
}

fn coverage() -> Verdict {
    let model = LinearTestModel::unit(vec![1.0, 2.0]).unwrap();
    let truth = model.analytic_sobol().unwrap();
    let sur = SyntheticSurrogate::oscillating(model.clone(), 0.002);
    let runs = 200;
    let mut plain = [0usize; 2];
    let mut combined = [0usize; 2];
    for r in 0..runs as u64 {
        for i in 1..=2 {
            let design = sample_design(model.domain(), i, 1000, 10_000 + r).unwrap();
            let exact = evaluate_pairs(&model, &design).unwrap();
            let point = estimate_sobol(&exact.y, &exact.y_prime).unwrap().value;
            let reps = bootstrap_replicates(&exact.y, &exact.y_prime, 2000, r).unwrap();
            if bc_interval(&reps.values, point, 0.05).unwrap().contains(truth[i - 1]) {
                plain[i - 1] += 1;
            }
            let s = evaluate_surrogate_pairs(&sur, &design).unwrap();
            let ci = combined_interval(&s, &CombinedConfig { seed: r, ..CombinedConfig::default() }).unwrap();
            if ci.contains(truth[i - 1]) {
                combined[i - 1] += 1;
            }
        }
    }
    let ok = plain.iter().chain(&combined).all(|&h| in_band(h, runs));
    verdict(
        ok,
        format!(
            "BC coverage S1 {}/{runs}, S2 {}/{runs}; combined coverage S1 {}/{runs}, S2 {}/{runs} (band 90%..99%)",
            plain[0], plain[1], combined[0], combined[1]
        ),
    )
}

fn accuracy() -> Verdict {
    let model = LinearTestModel::unit(vec![1.0, 2.0]).unwrap();
    let truth = model.analytic_sobol().unwrap();
    let mut errors = [0.0; 2];
    for i in 1..=2 {
        let design = sample_design(model.domain(), i, 100_000, 7).unwrap();
        let p = evaluate_pairs(&model, &design).unwrap();
        errors[i - 1] = (estimate_sobol(&p.y, &p.y_prime).unwrap().value - truth[i - 1]).abs();
    }
    verdict(
        errors.iter().all(|&e| e <= 0.01),
        format!("|error| S1 {:.2e}, S2 {:.2e} (tolerance 1e-2)", errors[0], errors[1]),
    )
}

fn convergence_shape() -> Verdict {
    let toy = ToyDiffusionModel::default();
    let reduced = toy_reduced(&toy, 1..=6);
    let mut ok = true;
    let mut lines = Vec::new();
    for i in 1..=2 {
        let design = sample_design(toy.domain(), i, 300, 8).unwrap();
        let mut widths = Vec::new();
        let mut gaps = Vec::new();
        for red in &reduced {
            let s = evaluate_surrogate_pairs(red, &design).unwrap();
            let ci = combined_interval(&s, &CombinedConfig { seed: 8, ..CombinedConfig::default() }).unwrap();
            widths.push(ci.point.width());
            gaps.push((ci.hi - ci.point.upper) + (ci.point.lower - ci.lo));
        }
        let monotone = widths.windows(2).all(|w| w[1] <= w[0] + 1e-10);
        let reference = gaps[5];
        let steady: Vec<bool> = gaps.iter().map(|g| (g - reference).abs() <= 0.5 * reference).collect();
        ok &= monotone && steady.iter().all(|&b| b);
        let off: Vec<String> = steady
            .iter()
            .enumerate()
            .filter(|(_, &b)| !b)
            .map(|(k, _)| format!("n={} gap {:.2}x", k + 1, gaps[k] / reference))
            .collect();
        lines.push(format!(
            "S{i}: widths {} {}, gap at n=6 {:.4}{}",
            widths.iter().map(|w| format!("{w:.1e}")).collect::<Vec<_>>().join(" "),
            if monotone { "non-increasing" } else { "NOT monotone" },
            reference,
            if off.is_empty() { String::new() } else { format!(", outside ±50%: {}", off.join(", ")) }
        ));
    }
    verdict(ok, lines.join("; "))
}

type Criterion = (u32, &'static str, f64, fn() -> Verdict);

const CRITERIA: [Criterion; 8] = [
    (1, "tuner table", 1.0, tuner_table),
    (2, "bound containment", 120.0, containment),
    (3, "degeneracy", 10.0, degeneracy),
    (4, "exhaustive-grid audit", 60.0, exhaustive_audit),
    (5, "RB certification", 60.0, rb_certification),
    (6, "coverage", 300.0, coverage),
    (7, "estimator accuracy", 30.0, accuracy),
    (8, "convergence shape", 120.0, convergence_shape),
];

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, limit, run) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let secs = start.elapsed().as_secs_f64();
        let pass = v.pass && secs < limit;
        println!(
            "criterion {id} {}: {name}: {} [{secs:.2}s, limit {limit}s]",
            if pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
