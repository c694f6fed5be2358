//! Independent oracles and lemma checkers.
//!
//! Nothing here reuses the closed forms it certifies: the arc-length oracle
//! locates entry and exit points by bisection on the horoball depth along the
//! geodesic and integrates the hyperbolic line element along the horosphere
//! with tanh-sinh quadrature.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::horoworld::{
    crossings, enumerate_horoballs, excursion, geodesic_horoball_intersection, Backend,
    CollectionSource, ExactGeodesic, ExcursionRecord, Horoball, HoroballCollection,
};
use crate::hypgeom::{
    geodesic_between, BoundaryPoint, Geodesic, InteriorPoint, TangentVector, DEFAULT_DELTA,
};

/// Absolute tolerance requested from the quadrature.
pub const QUADRATURE_TOL: f64 = 1e-9;

/// Relative tolerance of the arc-length comparison.
pub const ARC_TOL: f64 = 1e-6;

/// Relative drift allowed for fitted constants when the trial count doubles.
pub const STABILITY_TOL: f64 = 0.1;

/// Half-width of the tangency band excluded from classification checks.
pub const TANGENCY_BAND: f64 = 1e-9;

/// Excursion cutoff for backend comparisons.
pub const ENUMERATION_EPS: f64 = 1e-4;

/// Outcome of one oracle or lemma check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub trials: usize,
    /// Largest observed error, in the unit named by `metric`.
    pub max_error: Option<f64>,
    pub metric: String,
    /// Fitted constant at the full trial count.
    pub fitted_constant: Option<f64>,
    /// Fitted constant at half the trial count.
    pub fitted_constant_half: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub worst_case_input: String,
}

impl OracleReport {
    fn error(name: &str, trials: usize, max_error: f64, metric: &str, tol: f64, worst: String) -> Self {
        OracleReport {
            name: name.into(),
            trials,
            max_error: Some(max_error),
            metric: metric.into(),
            fitted_constant: None,
            fitted_constant_half: None,
            tolerance: tol,
            pass: max_error.is_finite() && max_error <= tol,
            worst_case_input: worst,
        }
    }

    /// `values` in trial order; the constant is their maximum, compared
    /// between the first half and all trials.
    fn fitted(name: &str, values: &[(f64, String)]) -> Self {
        let n = values.len();
        let argmax = |v: &[(f64, String)]| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
                .map(|(i, _)| i)
        };
        let (half, full) = match (argmax(&values[..n / 2]), argmax(values)) {
            (Some(h), Some(f)) => (values[h].0, f),
            _ => {
                return OracleReport {
                    name: name.into(),
                    trials: n,
                    max_error: None,
                    metric: "relative change under doubling".into(),
                    fitted_constant: None,
                    fitted_constant_half: None,
                    tolerance: STABILITY_TOL,
                    pass: false,
                    worst_case_input: "no samples".into(),
                }
            }
        };
        let c = values[full].0;
        let change = (c - half).abs() / c.abs();
        OracleReport {
            name: name.into(),
            trials: n,
            max_error: Some(change),
            metric: "relative change under doubling".into(),
            fitted_constant: Some(c),
            fitted_constant_half: Some(half),
            tolerance: STABILITY_TOL,
            pass: c.is_finite() && c > 0.0 && change <= STABILITY_TOL,
            worst_case_input: values[full].1.clone(),
        }
    }

    fn violations(name: &str, trials: usize, count: usize, worst: String) -> Self {
        OracleReport {
            name: name.into(),
            trials,
            max_error: Some(count as f64),
            metric: "violations".into(),
            fitted_constant: None,
            fitted_constant_half: None,
            tolerance: 0.0,
            pass: count == 0,
            worst_case_input: worst,
        }
    }
}

/// Excursion of a geodesic through a horoball, as computed by the code under test.
pub type ExcursionFn = dyn Fn(&Geodesic, &Horoball) -> Result<f64> + Sync;

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

// --- arc-length oracle -----------------------------------------------------

fn ln_depth(geo: &Geodesic, h: &Horoball, t: f64) -> f64 {
    h.depth(&geo.point(t)).ln()
}

/// Maximum of a concave function on `[lo, hi]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
        if hi - lo < 1e-15 * (1.0 + lo.abs()) {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, f(t))
}

/// Root of `f` on `[lo, hi]` given a sign change.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Time of deepest penetration along `geo` and the log-depth there.
fn deepest(geo: &Geodesic, h: &Horoball) -> (f64, f64) {
    let f = |t: f64| ln_depth(geo, h, t);
    let mut half = 64.0;
    loop {
        let (t, v) = golden_max(f, -half, half);
        if half - t.abs() > 1.0 || half >= 4096.0 {
            return (t, v);
        }
        half *= 4.0;
    }
}

fn quadrature(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    let out = quadrature::double_exponential::integrate(f, a, b, QUADRATURE_TOL);
    if !out.integral.is_finite() || out.error_estimate > QUADRATURE_TOL * out.integral.abs().max(1.0)
    {
        return Err(Error::QuadratureFailure { a, b });
    }
    Ok(out.integral)
}

type V3 = [f64; 3];

fn v3(p: &InteriorPoint) -> V3 {
    [p.horizontal.re, p.horizontal.im, p.height]
}
fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Hyperbolic length of the shortest horospherical path between `p` and `q`
/// on the horosphere bounding `h`.
fn horosphere_arc_length(h: &Horoball, p: &InteriorPoint, q: &InteriorPoint) -> Result<f64> {
    match h.base {
        BoundaryPoint::Infinity => {
            let (a, b) = (v3(p), v3(q));
            let dz = sub(b, a);
            let len = dz.iter().map(|x| x * x).sum::<f64>().sqrt();
            quadrature(|s| len / (a[2] + s * dz[2]), 0.0, 1.0)
        }
        BoundaryPoint::Finite(beta) => {
            // Horospherical geodesics are the circles through the base point.
            let c = [beta.re, beta.im, 0.0];
            let (a, b) = (sub(v3(p), c), sub(v3(q), c));
            let axb = cross(a, b);
            let denom = 2.0 * dot(axb, axb);
            // Circumcenter relative to the base point.
            let w = scale(cross(sub(scale(b, dot(a, a)), scale(a, dot(b, b))), axb), 1.0 / denom);
            let e1v = sub(a, w);
            let r = dot(e1v, e1v).sqrt();
            let e1 = scale(e1v, 1.0 / r);
            let d = sub(b, a);
            let e2v = sub(d, scale(e1, dot(d, e1)));
            let e2 = scale(e2v, 1.0 / dot(e2v, e2v).sqrt());
            let wrap = |x: f64| if x < 0.0 { x + std::f64::consts::TAU } else { x };
            let theta_q = wrap(dot(d, e2).atan2(r + dot(d, e1)));
            let mw = scale(w, -1.0);
            let theta_b = wrap(dot(mw, e2).atan2(dot(mw, e1)));
            let (lo, hi) = if theta_b > 0.0 && theta_b < theta_q {
                (theta_q, std::f64::consts::TAU)
            } else {
                (0.0, theta_q)
            };
            // Heights are taken relative to p: the circle can be far larger
            // than the arc, and center-relative heights would cancel.
            let y0 = p.height;
            let height = |th: f64| {
                let half = (0.5 * th).sin();
                y0 + r * (-2.0 * half * half * e1[2] + th.sin() * e2[2])
            };
            let span = hi - lo;
            quadrature(|s| r * span / height(lo + s * span), 0.0, 1.0)
        }
    }
}

/// Entry and exit times of `geo` in `h` found by bisection on the depth, or
/// `None` when the geodesic stays outside.
pub fn bisection_crossing(geo: &Geodesic, h: &Horoball) -> Result<Option<(f64, f64)>> {
    if let (BoundaryPoint::Finite(b), Some(f)) = (h.base, geo.forward.finite()) {
        if (b - f).norm() < 1e-12 {
            return Err(Error::EndpointInHoroballClosure);
        }
    }
    if let (BoundaryPoint::Finite(b), Some(f)) = (h.base, geo.backward.finite()) {
        if (b - f).norm() < 1e-12 {
            return Err(Error::EndpointInHoroballClosure);
        }
    }
    if h.base.is_infinity() && (geo.forward.is_infinity() || geo.backward.is_infinity()) {
        return Err(Error::EndpointInHoroballClosure);
    }
    let (t_max, v_max) = deepest(geo, h);
    if v_max <= 1e-12 {
        return Ok(None);
    }
    let f = |t: f64| ln_depth(geo, h, t);
    let mut lo = t_max - 1.0;
    while f(lo) > 0.0 {
        lo = t_max - 2.0 * (t_max - lo);
    }
    let mut hi = t_max + 1.0;
    while f(hi) > 0.0 {
        hi = t_max + 2.0 * (hi - t_max);
    }
    Ok(Some((bisect(f, lo, t_max), bisect(f, t_max, hi))))
}

/// Excursion of `geo` in `h` as the integral of `ds/y` along the shortest
/// horospherical path between the entry and exit points. Zero when tangent
/// or disjoint.
pub fn arc_length_excursion_oracle(geo: &Geodesic, h: &Horoball) -> Result<f64> {
    match bisection_crossing(geo, h)? {
        None => Ok(0.0),
        Some((t1, t2)) => horosphere_arc_length(h, &geo.point(t1), &geo.point(t2)),
    }
}

/// A random geodesic and a horoball meeting it, with the overlap spread
/// log-uniformly from near tangency to deep crossings.
pub fn random_arc_config<R: Rng>(rng: &mut R, three_d: bool) -> (Geodesic, Horoball) {
    let point = |rng: &mut R| {
        Complex64::new(
            rng.random_range(-3.0..3.0),
            if three_d { rng.random_range(-3.0..3.0) } else { 0.0 },
        )
    };
    loop {
        let (a, b) = (point(rng), point(rng));
        if (a - b).norm() < 0.1 {
            continue;
        }
        let anchor = InteriorPoint::new(0.5 * (a + b), 1.0);
        let Ok(geo) = geodesic_between(BoundaryPoint::Finite(a), BoundaryPoint::Finite(b), &anchor)
        else {
            continue;
        };
        let u = log_uniform(rng, 1e-3, 1e3);
        if rng.random_bool(0.2) {
            return (geo, Horoball::at_infinity(0.5 * (a - b).norm() / (1.0 + u)));
        }
        let beta = point(rng);
        if (beta - a).norm() < 1e-2 || (beta - b).norm() < 1e-2 {
            continue;
        }
        let (_, v) = deepest(&geo, &Horoball::finite(beta, 1.0));
        return (geo, Horoball::finite(beta, (-v).exp() * (1.0 + u)));
    }
}

/// Checks the closed-form excursion against the arc-length oracle on
/// `trials` random configurations, half in ℍ² and half in ℍ³.
pub fn arc_length_report(trials: usize, seed: u64, closed: &ExcursionFn) -> OracleReport {
    let semicircle = geodesic_between(
        BoundaryPoint::real(-1.0),
        BoundaryPoint::real(1.0),
        &InteriorPoint::origin(),
    )
    .expect("unit semicircle");
    let errs: Vec<(f64, String)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let (geo, h) = if i == 0 {
                (semicircle, Horoball::at_infinity(0.5))
            } else {
                random_arc_config(&mut rng, i % 2 == 1)
            };
            let input = format!("γ = {:?} → {:?}, H = {:?}", geo.backward, geo.forward, h);
            match (arc_length_excursion_oracle(&geo, &h), closed(&geo, &h)) {
                (Ok(o), Ok(c)) => ((o - c).abs() / o.abs().max(1e-300), input),
                (o, c) => (f64::INFINITY, format!("{input}: oracle {o:?}, closed form {c:?}")),
            }
        })
        .collect();
    let (max, worst) = errs
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap_or((0.0, String::new()));
    OracleReport::error("arc_length_excursion", trials, max, "relative error", ARC_TOL, worst)
}

// --- enumeration oracle ----------------------------------------------------

/// Records with excursion at least `eps` and midpoint in `[0, t]`, from the
/// exhaustive tile search. Requires a lattice collection.
pub fn bfs_enumeration_oracle(
    ray: &ExactGeodesic,
    t: f64,
    eps: f64,
    collection: &HoroballCollection,
) -> Result<Vec<ExcursionRecord>> {
    if !matches!(collection.source, CollectionSource::Lattice(_)) {
        return Err(Error::UnsupportedCollection);
    }
    enumerate_horoballs(ray, t, eps, collection, Backend::Bfs)
}

/// A ray through a random point of the fundamental domain at height in
/// `[1, 1.15)`, in a random direction.
pub fn random_window_ray<R: Rng>(rng: &mut R, three_d: bool) -> Result<ExactGeodesic> {
    let x = rng.random_range(-0.5..0.5);
    let y = if three_d { rng.random_range(-0.5..0.5) } else { 0.0 };
    let foot = InteriorPoint::h3(x, y, rng.random_range(1.0..1.15));
    let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (dir, v) = if three_d {
        let v: f64 = rng.random_range(-1.0..1.0);
        (Complex64::from_polar((1.0 - v * v).sqrt(), th), v)
    } else {
        (Complex64::new(th.cos(), 0.0), th.sin())
    };
    ExactGeodesic::from_geodesic(&TangentVector::new(foot, dir, v).geodesic()?)
}

type Keyed = Vec<(String, f64, f64)>;

fn keyed(recs: &[ExcursionRecord], eps: f64) -> Keyed {
    let mut v: Keyed = recs
        .iter()
        .filter(|r| r.excursion >= eps)
        .map(|r| {
            let key = match &r.horoball.cusp_point {
                Some(p) => format!("{p}"),
                None => format!("{:?}", r.horoball.base),
            };
            (key, r.t_entry, r.t_exit)
        })
        .collect();
    v.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    v
}

/// Largest time discrepancy between matched records, or `None` when the
/// keyed multisets differ.
fn compare_keyed(a: &Keyed, b: &Keyed) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        if x.0 != y.0 {
            return None;
        }
        worst = worst.max((x.1 - y.1).abs()).max((x.2 - y.2).abs());
    }
    Some(worst)
}

/// Compares the marching and tile-search backends on `windows` random
/// windows of length at most 20 above `ENUMERATION_EPS`. A differing record
/// multiset counts as an infinite error.
pub fn enumeration_report(preset: &str, windows: usize, seed: u64) -> OracleReport {
    let name = format!("enumeration_equivalence_{preset}");
    let collection = match HoroballCollection::preset(preset, crate::horoworld::DEFAULT_CUSP_HEIGHT) {
        Ok(c) => c,
        Err(e) => return OracleReport::error(&name, 0, f64::INFINITY, "time", 1e-7, e.to_string()),
    };
    let three_d = collection.dimension() == 3;
    let errs: Vec<(f64, String)> = (0..windows as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let ray = match random_window_ray(&mut rng, three_d) {
                Ok(r) => r,
                Err(e) => return (f64::INFINITY, e.to_string()),
            };
            let len = rng.random_range(1.0..20.0);
            let input = format!("window [0, {len}] on {:?} → {:?}", ray.backward, ray.forward);
            let cf = crossings(&ray, 0.0, len, &collection, Backend::Cf);
            let bfs = crossings(&ray, 0.0, len, &collection, Backend::Bfs);
            match (cf, bfs) {
                (Ok(a), Ok(b)) => match compare_keyed(&keyed(&a, ENUMERATION_EPS), &keyed(&b, ENUMERATION_EPS)) {
                    Some(d) => (d, input),
                    None => (f64::INFINITY, format!("{input}: record sets differ")),
                },
                (a, b) => (f64::INFINITY, format!("{input}: {:?} / {:?}", a.err(), b.err())),
            }
        })
        .collect();
    let (max, worst) = errs
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap_or((0.0, String::new()));
    OracleReport::error(&name, windows, max, "time discrepancy", 1e-7, worst)
}

/// Golden-ratio ray, empty window and cutoff halving checks of the tile-search oracle.
pub fn enumeration_sanity_report() -> OracleReport {
    let name = "enumeration_oracle_sanity";
    let run = || -> Result<Vec<String>> {
        let mut failures = Vec::new();
        let c = HoroballCollection::preset("psl2z", crate::horoworld::DEFAULT_CUSP_HEIGHT)?;
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let g = geodesic_between(
            BoundaryPoint::real(phi - 3.0),
            BoundaryPoint::real(phi),
            &InteriorPoint::h2(0.0, 1.0),
        )?;
        let ray = ExactGeodesic::from_geodesic(&g)?;
        let a = keyed(&crossings(&ray, 0.0, 20.0, &c, Backend::Cf)?, ENUMERATION_EPS);
        let b = keyed(&crossings(&ray, 0.0, 20.0, &c, Backend::Bfs)?, ENUMERATION_EPS);
        if compare_keyed(&a, &b).is_none_or(|d| d > 1e-7) {
            failures.push("golden-ratio ray: backends differ".to_string());
        }
        if !bfs_enumeration_oracle(&ray, 0.0, ENUMERATION_EPS, &c)?.is_empty() {
            failures.push("empty window returned records".to_string());
        }
        let mut rng = trial_rng(0x5eed, 0);
        for _ in 0..10 {
            let ray = random_window_ray(&mut rng, false)?;
            let len = rng.random_range(1.0..20.0);
            let mut eps = 1e-1;
            let mut prev: Option<Keyed> = None;
            for _ in 0..4 {
                match bfs_enumeration_oracle(&ray, len, eps, &c) {
                    Ok(recs) => {
                        let k = keyed(&recs, 0.0);
                        if let Some(p) = &prev {
                            if !p.iter().all(|r| k.iter().any(|s| s.0 == r.0)) {
                                failures.push(format!("cutoff {eps}: not a superset"));
                            }
                        }
                        prev = Some(k);
                    }
                    // Windows ending inside a horoball are refused at every cutoff.
                    Err(Error::WindowEndpointInHoroball { .. }) => break,
                    Err(e) => return Err(e),
                }
                eps /= 2.0;
            }
        }
        Ok(failures)
    };
    match run() {
        Ok(f) => OracleReport::violations(name, 12, f.len(), f.join("; ")),
        Err(e) => OracleReport::violations(name, 12, usize::MAX, e.to_string()),
    }
}

// --- lemma checkers --------------------------------------------------------

/// Sequences with `d_{i+1} ≥ d_i + c e^{−d_i/2}` against the lower bound
/// `2 ln(1 + ic/2)` for `i ≤ steps`.
pub fn recurrence_report(sequences: usize, steps: usize, seed: u64) -> OracleReport {
    let out: Vec<(usize, String)> = (0..sequences as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = trial_rng(seed, s);
            let c = match s {
                0 => 2.0 - 1e-12,
                1 => 1e-6,
                _ => rng.random_range(0.0..2.0f64).max(1e-12),
            };
            let mut d = if s < 2 || rng.random_bool(0.5) {
                0.0
            } else {
                rng.random_range(0.0..5.0)
            };
            let tight = s < 2 || rng.random_bool(0.5);
            let (mut bad, mut worst) = (0usize, String::new());
            for i in 0..=steps {
                let bound = 2.0 * (i as f64 * c / 2.0).ln_1p();
                if d < bound {
                    bad += 1;
                    worst = format!("c = {c}, i = {i}, d_i = {d}, bound = {bound}");
                }
                let slack = if tight { 0.0 } else { rng.random_range(0.0..0.1) };
                d += c * (-d / 2.0).exp() + slack;
            }
            (bad, worst)
        })
        .collect();
    let bad: usize = out.iter().map(|o| o.0).sum();
    let worst = out.into_iter().find(|o| o.0 > 0).map(|o| o.1).unwrap_or_default();
    OracleReport::violations("recurrence", sequences * (steps + 1), bad, worst)
}

/// `(x + y)ᵏ ≤ xᵏ + 2ᵏ⁻¹ k y (xᵏ⁻¹ + yᵏ⁻¹)` for `k ≥ 1`, `x, y ≥ 0`, up to
/// a few units of floating-point rounding.
pub fn powers_k_report(trials: usize, seed: u64) -> OracleReport {
    let draw = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.05) {
            0.0
        } else {
            log_uniform(rng, 1e-8, 1e8)
        }
    };
    let out: Vec<Option<String>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let k = if i % 10 == 0 { 1.0 } else { rng.random_range(1.0..8.0) };
            let (x, y) = (draw(&mut rng), draw(&mut rng));
            let lhs = (x + y).powf(k);
            let rhs = x.powf(k) + 2f64.powf(k - 1.0) * k * y * (x.powf(k - 1.0) + y.powf(k - 1.0));
            (lhs > rhs * (1.0 + 4.0 * f64::EPSILON))
                .then(|| format!("k = {k}, x = {x}, y = {y}: {lhs} > {rhs}"))
        })
        .collect();
    let worst: Vec<String> = out.into_iter().flatten().collect();
    OracleReport::violations("powers_k", trials, worst.len(), worst.first().cloned().unwrap_or_default())
}

/// The vertical geodesic `{x = w}` with `γ(0)` at height 1.
pub fn vertical_geodesic(w: Complex64) -> Geodesic {
    geodesic_between(
        BoundaryPoint::Finite(w),
        BoundaryPoint::Infinity,
        &InteriorPoint::new(w, 1.0),
    )
    .expect("vertical geodesic")
}

/// A horoball meeting `{x = 0}` at heights `y1 < y2`, built from its entry
/// height and the offset `s` of its rightmost point from the axis.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisConfig {
    pub horoball: Horoball,
    pub y1: f64,
    pub y2: f64,
    /// Horizontal offset `S`: the ball reaches `x = S` in the plane of its base.
    pub offset: f64,
}

impl AxisConfig {
    /// In-plane ball of radius `R = y1 + S + √(2 y1 S)` with base at
    /// `(S − R)e^{iφ}`, so that it meets the axis at `y1` and `y2`.
    pub fn new(y1: f64, s: f64, phi: f64) -> AxisConfig {
        let r = y1 + s + (2.0 * y1 * s).sqrt();
        let y2 = r + (2.0 * r * s - s * s).sqrt();
        let base = Complex64::from_polar(s - r, phi);
        AxisConfig {
            horoball: Horoball::finite(base, 2.0 * r),
            y1,
            y2,
            offset: s,
        }
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.horoball.size()
    }

    pub fn base(&self) -> Complex64 {
        self.horoball.base.finite().expect("finite horoball")
    }

    /// Whether the horoball meets the vertical line `{x = δ}`.
    pub fn meets_line(&self, delta: f64) -> bool {
        (self.base() - delta).norm() < self.radius()
    }

    /// `∫_{y1}^{y2} y^{−(k+1)/2} dy` for `k > 1`.
    pub fn comparison_integral(&self, k: f64) -> f64 {
        let e = 0.5 * (k - 1.0);
        (self.y1.powf(-e) - self.y2.powf(-e)) / e
    }
}

/// Horoballs meeting the axis with `y1 ≥ 1` and missing `{x = δ}`; rotated
/// out of the plane when `three_d`.
pub fn sample_comparison_config<R: Rng>(rng: &mut R, delta: f64, three_d: bool) -> AxisConfig {
    loop {
        let y1 = log_uniform(rng, 1.0, 1e6);
        let s = delta * (1.0 - rng.random::<f64>());
        let phi = if three_d {
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
        } else {
            0.0
        };
        let cfg = AxisConfig::new(y1, s, phi);
        if !cfg.meets_line(delta) {
            return cfg;
        }
    }
}

/// Disjoint horoballs stacked along `{x = 0, y ≥ 1}`, each missing `{x = δ}`.
pub fn sample_disjoint_family<R: Rng>(rng: &mut R, delta: f64, three_d: bool) -> Vec<AxisConfig> {
    let mut family: Vec<AxisConfig> = Vec::new();
    let mut y1 = 1.0 + rng.random::<f64>().powi(3);
    while y1 < 1e8 && family.len() < 400 {
        let s = delta * (1.0 - rng.random::<f64>());
        let phi = if three_d {
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
        } else {
            0.0
        };
        let cfg = AxisConfig::new(y1, s, phi);
        let disjoint = family.iter().all(|o| {
            (o.base() - cfg.base()).norm_sqr() >= o.horoball.size() * cfg.horoball.size()
        });
        if cfg.meets_line(delta) || !disjoint {
            y1 *= 1.0 + log_uniform(rng, 1e-4, 1.0);
            continue;
        }
        y1 = cfg.y2 * (1.0 + log_uniform(rng, 1e-6, 1.0));
        family.push(cfg);
    }
    family
}

/// A horoball meeting both `{x = 0}` and `{x = δ}` with entry heights at
/// least `1 + δ`. Returns the horoball and both entry heights.
pub fn sample_dist1_config<R: Rng>(rng: &mut R, delta: f64, three_d: bool) -> (Horoball, f64, f64) {
    let entry = |d: f64, m: f64| {
        let disc = d * d - 4.0 * m;
        (disc > 0.0).then(|| 2.0 * m / (d + disc.sqrt()))
    };
    loop {
        let d = log_uniform(rng, 2.0 * (1.0 + delta), 1e6);
        let re = rng.random_range(delta - 0.5 * d..0.5 * d);
        let im = if three_d { rng.random_range(-0.5 * d..0.5 * d) } else { 0.0 };
        let beta = Complex64::new(re, im);
        let (Some(y1), Some(y1p)) = (entry(d, beta.norm_sqr()), entry(d, (beta - delta).norm_sqr()))
        else {
            continue;
        };
        if y1 >= 1.0 + delta && y1p >= 1.0 + delta {
            return (Horoball::finite(beta, d), y1, y1p);
        }
    }
}

/// `ℓ ≤ 2 ln(1 + √(2δ/y1))` iff the horoball misses `{x = δ}`, on
/// configurations straddling tangency. Chords come from the closed-form
/// intersection.
pub fn compute_equivalence_report(trials: usize, seed: u64) -> OracleReport {
    let axis = vertical_geodesic(Complex64::new(0.0, 0.0));
    let out: Vec<Option<String>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let y1 = log_uniform(&mut rng, 1.0, 1e4);
            let delta = rng.random_range(0.05..2.0);
            let eta = log_uniform(&mut rng, 1e-12, 0.9) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            if eta.abs() <= TANGENCY_BAND {
                return None;
            }
            let s = delta * (1.0 + eta);
            let cfg = AxisConfig::new(y1, s, 0.0);
            let chord = match geodesic_horoball_intersection(&axis, &cfg.horoball) {
                Ok(Some((a, b))) => b - a,
                other => return Some(format!("y1 = {y1}, S = {s}: no crossing ({other:?})")),
            };
            let inequality = chord <= 2.0 * (2.0 * delta / y1).sqrt().ln_1p();
            let disjoint = s <= delta;
            (inequality != disjoint).then(|| {
                format!("y1 = {y1}, δ = {delta}, S = {s}, ℓ = {chord}: inequality {inequality}, disjoint {disjoint}")
            })
        })
        .collect();
    let worst: Vec<String> = out.into_iter().flatten().collect();
    OracleReport::violations("e_compute", trials, worst.len(), worst.first().cloned().unwrap_or_default())
}

/// Fitted `c` in `E(γ, H)ᵏ ≤ c ∫_{y1}^{y2} y^{−(k+1)/2} dy` over horoballs
/// missing `{x = δ}`.
pub fn excursion_comparison_report(
    k: f64,
    trials: usize,
    seed: u64,
    closed: &ExcursionFn,
) -> OracleReport {
    let axis = vertical_geodesic(Complex64::new(0.0, 0.0));
    let values: Vec<(f64, String)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let cfg = sample_comparison_config(&mut rng, DEFAULT_DELTA, i % 2 == 1);
            let e = closed(&axis, &cfg.horoball).unwrap_or(f64::NAN);
            let ratio = e.powf(k) / cfg.comparison_integral(k);
            (if ratio.is_nan() { f64::INFINITY } else { ratio }, format!("{cfg:?}"))
        })
        .collect();
    OracleReport::fitted(&format!("excursion_comparison_k{k}"), &values)
}

/// Fitted `c` in `Σ E(γ, Hᵢ)ᵏ ≤ c · 2/(k − 1)` over disjoint families missing
/// `{x = δ}`. A family whose comparison integrals exceed `2/(k − 1)` makes
/// the constant infinite.
pub fn disjoint_family_report(k: f64, trials: usize, seed: u64, closed: &ExcursionFn) -> OracleReport {
    let axis = vertical_geodesic(Complex64::new(0.0, 0.0));
    let tail = 2.0 / (k - 1.0);
    let values: Vec<(f64, String)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let family = sample_disjoint_family(&mut rng, DEFAULT_DELTA, i % 2 == 1);
            let integrals: f64 = family.iter().map(|c| c.comparison_integral(k)).sum();
            let sum: f64 = family
                .iter()
                .map(|c| closed(&axis, &c.horoball).unwrap_or(f64::NAN).powf(k))
                .sum();
            let input = format!("{} horoballs, first {:?}", family.len(), family.first());
            if integrals > tail * (1.0 + 1e-12) || sum.is_nan() {
                return (f64::INFINITY, input);
            }
            (sum / tail, input)
        })
        .collect();
    OracleReport::fitted(&format!("disjoint_family_k{k}"), &values)
}

/// Fitted `c` in `|E(γ, H) − E(γ′, H)| ≤ c e^{−d/2}`, `d = ln y1`, for
/// horoballs meeting both lines with entries at least `1 + δ`.
pub fn dist1_report(trials: usize, seed: u64, closed: &ExcursionFn) -> OracleReport {
    let delta = DEFAULT_DELTA;
    let g0 = vertical_geodesic(Complex64::new(0.0, 0.0));
    let g1 = vertical_geodesic(Complex64::new(delta, 0.0));
    let values: Vec<(f64, String)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let (h, y1, y1p) = sample_dist1_config(&mut rng, delta, i % 2 == 1);
            let (e0, e1) = match (closed(&g0, &h), closed(&g1, &h)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => return (f64::INFINITY, format!("{h:?}")),
            };
            let v = (e0 - e1).abs() * y1.sqrt();
            (v, format!("{h:?}, y1 = {y1}, y1' = {y1p}"))
        })
        .collect();
    OracleReport::fitted("dist1", &values)
}

/// Trial counts for [`lemma_suite_with`]. Fitted constants use `fit_trials`
/// and are compared against their value at half that count.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub arc_trials: usize,
    pub recurrence_sequences: usize,
    pub recurrence_steps: usize,
    pub powers_trials: usize,
    pub compute_trials: usize,
    pub fit_trials: usize,
    pub windows_psl2z: usize,
    pub windows_psl2zi: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            arc_trials: 1000,
            recurrence_sequences: 100,
            recurrence_steps: 10_000,
            powers_trials: 10_000,
            compute_trials: 1000,
            fit_trials: 20_000,
            windows_psl2z: 100,
            windows_psl2zi: 50,
        }
    }
}

/// Exponents used for the constant fits (the lemmas need `k > 1`).
pub const FIT_EXPONENTS: [f64; 3] = [1.5, 2.0, 3.0];

fn closed_form(geo: &Geodesic, h: &Horoball) -> Result<f64> {
    excursion(geo, h)
}

/// Every oracle and lemma check with default trial counts.
pub fn lemma_suite() -> Vec<OracleReport> {
    lemma_suite_with(&SuiteConfig::default(), &closed_form)
}

/// Runs every check, using `closed` wherever the code's excursion is under test.
pub fn lemma_suite_with(cfg: &SuiteConfig, closed: &ExcursionFn) -> Vec<OracleReport> {
    let s = cfg.seed;
    let mut out = vec![
        arc_length_report(cfg.arc_trials, s, closed),
        recurrence_report(cfg.recurrence_sequences, cfg.recurrence_steps, s.wrapping_add(1)),
        powers_k_report(cfg.powers_trials, s.wrapping_add(2)),
        compute_equivalence_report(cfg.compute_trials, s.wrapping_add(3)),
    ];
    for (j, &k) in FIT_EXPONENTS.iter().enumerate() {
        out.push(excursion_comparison_report(k, cfg.fit_trials, s.wrapping_add(10 + j as u64), closed));
        out.push(disjoint_family_report(k, cfg.fit_trials, s.wrapping_add(20 + j as u64), closed));
    }
    out.push(dist1_report(cfg.fit_trials, s.wrapping_add(4), closed));
    out.push(enumeration_report("psl2z", cfg.windows_psl2z, s.wrapping_add(5)));
    out.push(enumeration_report("psl2zi", cfg.windows_psl2zi, s.wrapping_add(6)));
    out.push(enumeration_sanity_report());
    out
}

pub fn all_pass(reports: &[OracleReport]) -> bool {
    reports.iter().all(|r| r.pass)
}
