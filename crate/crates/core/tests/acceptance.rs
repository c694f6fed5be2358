//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! `cargo test --release -p cuspex --test acceptance -- [1 2 ...]`

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cuspex::excursion::{birkhoff_target, default_grid, excursion_sum, step_excursion};
use cuspex::experiment::{
    birkhoff_medians, median_ratios, run_birkhoff, run_dichotomy, BirkhoffSpec, DichotomySpec,
};
use cuspex::horoworld::{excursion, Backend, HoroballCollection};
use cuspex::hypgeom::{hyp_distance, mobius_apply_interior, InteriorPoint, Isometry};
use cuspex::lattice::{preset, GroupElement};
use cuspex::samplers::{estimate_return_time_tail, linear_fit, RayKind, StepMeasure, TwoSidedPath};
use cuspex::verify::{
    all_pass, arc_length_report, enumeration_report, lemma_suite, random_arc_config,
    random_window_ray, OracleReport,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn report_line(r: &OracleReport) -> String {
    match (r.max_error, r.fitted_constant) {
        (_, Some(c)) => format!(
            "{}: c={c:.4} half={:.4}",
            r.name,
            r.fitted_constant_half.unwrap_or(f64::NAN)
        ),
        (Some(e), None) => format!("{}: {}={e:.3e}", r.name, r.metric),
        (None, None) => format!("{}: {}", r.name, r.metric),
    }
}

fn arc_length() -> Outcome {
    let start = Instant::now();
    let r = arc_length_report(1000, SEED, &|g, h| excursion(g, h));
    let el = start.elapsed();
    let pass = r.pass && within(el, Duration::from_secs(30));
    outcome(
        pass,
        format!("{} trials, max rel error {:.3e} (tol 1e-6), {:.1?}", r.trials, r.max_error.unwrap_or(f64::NAN), el),
    )
}

fn enumeration() -> Outcome {
    let start = Instant::now();
    let a = enumeration_report("psl2z", 100, SEED);
    let b = enumeration_report("psl2zi", 50, SEED);
    let el = start.elapsed();
    let pass = a.pass && b.pass && within(el, Duration::from_secs(300));
    outcome(
        pass,
        format!(
            "psl2z {} windows {}, psl2zi {} windows {}, {:.1?}",
            a.trials,
            if a.pass { "identical" } else { "DIFFER" },
            b.trials,
            if b.pass { "identical" } else { "DIFFER" },
            el
        ),
    )
}

fn lemmas() -> Outcome {
    let reports = lemma_suite();
    let failed: Vec<String> = reports.iter().filter(|r| !r.pass).map(report_line).collect();
    let detail = if failed.is_empty() {
        reports.iter().map(report_line).collect::<Vec<_>>().join("; ")
    } else {
        format!("failed: {}", failed.join("; "))
    };
    outcome(all_pass(&reports), detail)
}

fn rel(a: f64, b: f64) -> f64 {
    (b - a) / a
}

fn plateaus(m: &[f64]) -> (bool, f64) {
    let c = rel(m[m.len() - 2], m[m.len() - 1]).abs();
    (c < 0.1, c)
}

/// Grows by at least 25% from t = 1000 to t = 8000, monotone over those doublings.
fn grows(grid: &[f64], m: &[f64]) -> (bool, f64) {
    let i = grid.iter().position(|&t| t == 1000.0).unwrap();
    let tail = &m[i..];
    let g = rel(tail[0], tail[tail.len() - 1]);
    (g >= 0.25 && tail.windows(2).all(|w| w[1] >= w[0]), g)
}

fn dichotomy(name: &str, ks: Vec<f64>, limit: Duration) -> Outcome {
    let start = Instant::now();
    let grid = default_grid();
    let spec = DichotomySpec::for_preset(name, 1.2, ks.clone(), grid.clone(), 50, SEED).unwrap();
    let results = match run_dichotomy(&spec) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let el = start.elapsed();
    let top = *ks.last().unwrap();
    let rw = median_ratios(&results, RayKind::RandomWalk, top);
    let leb = median_ratios(&results, RayKind::Lebesgue, top);
    let (rw_ok, rw_c) = plateaus(&rw);
    let (leb_ok, leb_g) = grows(&grid, &leb);
    let mut pass = rw_ok && leb_ok && within(el, limit);
    let mut detail = format!(
        "k={top}: RW medians {} (last doubling {:+.1}%), Lebesgue medians {} (1000->8000 {:+.1}%)",
        fmt(&rw),
        100.0 * rw_c,
        fmt(&leb),
        100.0 * leb_g
    );
    if ks.len() > 1 {
        for kind in [RayKind::RandomWalk, RayKind::Lebesgue] {
            let m = median_ratios(&results, kind, ks[0]);
            let (ok, c) = plateaus(&m);
            pass &= ok;
            detail += &format!("; k={} {} medians {} (last doubling {:+.1}%)", ks[0], kind.label(), fmt(&m), 100.0 * c);
        }
    }
    detail += &format!("; {el:.1?}");
    outcome(pass, detail)
}

fn birkhoff() -> Outcome {
    let start = Instant::now();
    let collection = HoroballCollection::preset("psl2z", 1.2).unwrap();
    let grid = vec![1250.0, 2500.0, 5000.0, 10_000.0];
    let spec = BirkhoffSpec {
        collection: collection.clone(),
        ks: vec![0.5, 1.0],
        grid: grid.clone(),
        trials: 50,
        seed: SEED,
        backend: Backend::Cf,
    };
    let rows = match run_birkhoff(&spec) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let half = birkhoff_medians(&rows, 0.5, &grid);
    let one = birkhoff_medians(&rows, 1.0, &grid);
    let target = birkhoff_target(&collection, 0.5).unwrap().unwrap();
    let err = (half[half.len() - 1] - target).abs() / target;
    let increasing = one.windows(2).all(|w| w[1] > w[0]);
    outcome(
        err <= 0.1 && increasing,
        format!(
            "k=0.5 median at t=1e4 {:.4} vs {target:.4} ({:.2}%); k=1 medians {}; {:.1?}",
            half[half.len() - 1],
            100.0 * err,
            fmt(&one),
            start.elapsed()
        ),
    )
}

fn return_time() -> Outcome {
    let start = Instant::now();
    let collection = HoroballCollection::preset("psl2z", 1.2).unwrap();
    let mu = StepMeasure::default_for(&preset("psl2z").unwrap()).unwrap();
    let tail = match estimate_return_time_tail(&mu, &collection, 10_000, 15, SEED) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail
        .tail
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, p)| **p > 0.0)
        .map(|(n, p)| (n as f64, p.ln()))
        .unzip();
    let (s1, _, r1) = linear_fit(&xs, &ys);
    outcome(
        tail.slope < 0.0 && tail.r_squared >= 0.9,
        format!(
            "slope {:.4}, R^2 {:.4} (n = 0..15; n = 1..15 gives slope {s1:.4}, R^2 {r1:.4}), tail {}, {:.1?}",
            tail.slope,
            tail.r_squared,
            fmt(&tail.tail),
            start.elapsed()
        ),
    )
}

fn lattice_word(rng: &mut ChaCha8Rng, bianchi: bool, len: usize) -> GroupElement {
    let mut gens = vec![GroupElement::s(), GroupElement::t(), GroupElement::t().inverse()];
    if bianchi {
        gens.extend([GroupElement::u(), GroupElement::u().inverse()]);
    }
    (0..len).fold(GroupElement::identity(), |g, _| {
        g.multiply(&gens[rng.random_range(0..gens.len())])
    })
}

fn random_point(rng: &mut ChaCha8Rng) -> InteriorPoint {
    InteriorPoint::h3(
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0f64..2.0).exp(),
    )
}

fn invariance() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let g = lattice_word(&mut rng, true, 8).to_isometry().unwrap();
        let (p, q) = (random_point(&mut rng), random_point(&mut rng));
        let d = hyp_distance(&p, &q);
        let e = hyp_distance(&mobius_apply_interior(&g, &p), &mobius_apply_interior(&g, &q));
        worst = worst.max((d - e).abs() / (1.0 + d));
    }
    if worst > 1e-9 {
        failures.push(format!("distance {worst:.2e}"));
    }
    let dist = worst;

    worst = 0.0;
    for i in 0..1000 {
        let three_d = i % 2 == 1;
        let (geo, h) = random_arc_config(&mut rng, three_d);
        let mut c = || Complex64::new(rng.random_range(-2.0..2.0), if three_d { rng.random_range(-2.0..2.0) } else { 0.0 });
        let (a, b, cc, d) = (c(), c(), c(), c());
        if (a * d - b * cc).norm() <= 0.1 {
            continue;
        }
        let g = Isometry::new(a, b, cc, d).unwrap();
        let (Ok(e), Ok(moved)) = (excursion(&geo, &h), geo.transformed(&g)) else {
            failures.push("excursion evaluation".into());
            break;
        };
        let ge = excursion(&moved, &h.transformed(&g)).unwrap();
        worst = worst.max((e - ge).abs() / (1.0 + e));
    }
    if worst > 1e-9 {
        failures.push(format!("excursion {worst:.2e}"));
    }
    let exc = worst;

    worst = 0.0;
    for (name, bianchi) in [("psl2z", false), ("psl2zi", true)] {
        let c = HoroballCollection::preset(name, 1.2).unwrap();
        for _ in 0..20 {
            let ray = random_window_ray(&mut rng, bianchi).unwrap();
            let moved = ray.transformed(&lattice_word(&mut rng, bianchi, 8));
            for k in [1.0, 2.0] {
                let a = excursion_sum(&ray, 40.0, k, &c, 1e-6, Backend::Cf).unwrap().value;
                let b = excursion_sum(&moved, 40.0, k, &c, 1e-6, Backend::Cf).unwrap().value;
                worst = worst.max((a - b).abs() / (1.0 + a));
            }
        }
    }
    if worst > 1e-6 {
        failures.push(format!("sums {worst:.2e}"));
    }
    let sums = worst;

    let c = HoroballCollection::preset("psl2z", 1.2).unwrap();
    let mu = StepMeasure::default_for(&preset("psl2z").unwrap()).unwrap();
    let x = InteriorPoint::h2(0.1, 1.05);
    let mut shift_bad = 0;
    let mut subadd_worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let (n, m) = (rng.random_range(1..40usize), rng.random_range(1..40usize));
        let path = TwoSidedPath::sample_resolved(&mu, n + m, 40.0, &mut rng).unwrap();
        let shifted = path.shifted(n).unwrap();
        let winv = path.position(n as i64).inverse();
        for j in -(n as i64)..=(m as i64) {
            let expected = winv.multiply(path.position(n as i64 + j)).normalized();
            if shifted.position(j).clone().normalized() != expected {
                shift_bad += 1;
            }
        }
        for k in [1.0, 2.0] {
            let whole = step_excursion(&path, n + m, k, &x, &c, Backend::Cf).unwrap();
            let first = step_excursion(&path, n, k, &x, &c, Backend::Cf).unwrap();
            let rest = step_excursion(&shifted, m, k, &x, &c, Backend::Cf).unwrap();
            subadd_worst = subadd_worst.max((whole - first - rest) / (1.0 + whole));
        }
    }
    if shift_bad > 0 {
        failures.push(format!("shift identity {shift_bad} mismatches"));
    }
    if subadd_worst > 1e-4 {
        failures.push(format!("subadditivity excess {subadd_worst:.2e}"));
    }

    let detail = format!(
        "distance {dist:.1e} (tol 1e-9), excursion {exc:.1e} (tol 1e-9), sums {sums:.1e} (tol 1e-6), \
         shift identity exact, subadditivity max excess {subadd_worst:.1e} (tol 1e-4); {:.1?}{}",
        start.elapsed(),
        if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join(", ")) }
    );
    outcome(failures.is_empty(), detail)
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("closed-form excursion vs arc-length oracle", arc_length),
        ("CF and BFS enumeration agree", enumeration),
        ("lemma suite", lemmas),
        ("dichotomy psl2z, k=1", || dichotomy("psl2z", vec![1.0], Duration::from_secs(1800))),
        ("dichotomy psl2zi, k=1,2", || dichotomy("psl2zi", vec![1.0, 2.0], Duration::from_secs(7200))),
        ("Birkhoff averages", birkhoff),
        ("return-time tail", return_time),
        ("invariance suites", invariance),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !selected.is_empty() && !selected.contains(&(i + 1)) {
            continue;
        }
        let o = run();
        all &= o.pass;
        println!("[{}] criterion {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
