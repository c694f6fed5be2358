//! Excursion sums along geodesics and sample paths, thick distance, and the
//! cusp-depth observable with its flow averages.

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta, beta_reg};

use crate::error::{Error, Result};
use crate::horoworld::{
    crossings, Backend, CollectionSource, ExactGeodesic, ExcursionRecord, HoroballCollection,
};
use crate::hypgeom::{geodesic_through, hyp_distance, InteriorPoint, TangentVector};
use crate::lattice::PresetKind;
use crate::samplers::TwoSidedPath;

/// `𝓔⁽ᵏ⁾(γ, t)` with bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionSum {
    pub value: f64,
    /// `(number of skipped records) · εᵏ`.
    pub truncation_bound: f64,
    pub n_horoballs: usize,
    /// Window end actually used: `t`, or the exit time of the horoball
    /// containing `γ(t)`.
    pub t_eff: f64,
}

fn check_k(k: f64) -> Result<()> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::InvalidArgument(format!("k must be ≥ 1, got {k}")));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
    }
    Ok(())
}

/// Fails if `γ(0)` is inside a horoball.
fn check_start(records: &[ExcursionRecord]) -> Result<()> {
    if let Some(r) = records.iter().find(|r| r.t_entry < 0.0 && r.t_exit > 0.0) {
        return Err(Error::WindowEndpointInHoroball {
            time: 0.0,
            exit_time: r.t_exit,
        });
    }
    Ok(())
}

/// End of the window `[0, t]` after sliding it out of any horoball.
fn slide(records: &[ExcursionRecord], t: f64) -> f64 {
    records
        .iter()
        .find(|r| r.t_entry < t && t < r.t_exit)
        .map(|r| r.t_exit)
        .unwrap_or(t)
}

fn summarize(records: &[ExcursionRecord], t: f64, k: f64, eps: f64) -> ExcursionSum {
    let t_eff = slide(records, t);
    let mut sum = ExcursionSum {
        value: 0.0,
        truncation_bound: 0.0,
        n_horoballs: 0,
        t_eff,
    };
    let mut skipped = 0usize;
    for r in records.iter().filter(|r| r.midpoint_time >= 0.0 && r.midpoint_time <= t_eff) {
        if r.excursion >= eps {
            sum.value += r.excursion.powf(k);
            sum.n_horoballs += 1;
        } else {
            skipped += 1;
        }
    }
    sum.truncation_bound = skipped as f64 * eps.powf(k);
    sum
}

/// `𝓔⁽ᵏ⁾(γ, t) = Σ E(γ, H)ᵏ` over horoballs with midpoint in `[0, t]` and
/// excursion at least `ε`. If `γ(t)` lies in a horoball the window is slid
/// forward to its exit.
pub fn excursion_sum(
    ray: &ExactGeodesic,
    t: f64,
    k: f64,
    collection: &HoroballCollection,
    eps: f64,
    backend: Backend,
) -> Result<ExcursionSum> {
    check_k(k)?;
    check_eps(eps)?;
    if t <= 0.0 {
        return Ok(ExcursionSum {
            value: 0.0,
            truncation_bound: 0.0,
            n_horoballs: 0,
            t_eff: t.max(0.0),
        });
    }
    let records = crossings(ray, 0.0, t, collection, backend)?;
    check_start(&records)?;
    Ok(summarize(&records, t, k, eps))
}

/// `X_n⁽ᵏ⁾(ω)`: excursions of `γ_ω` through horoballs whose midpoint lies
/// between the projections `p₀` and `p_n`.
pub fn step_excursion(
    path: &TwoSidedPath,
    n: usize,
    k: f64,
    x: &InteriorPoint,
    collection: &HoroballCollection,
    backend: Backend,
) -> Result<f64> {
    check_k(k)?;
    if n == 0 {
        return Ok(0.0);
    }
    if n > path.n_forward() {
        return Err(Error::InvalidArgument(format!(
            "step {n} beyond path length {}",
            path.n_forward()
        )));
    }
    let ray = path.geodesic(x)?;
    let w = path.position(n as i64);
    let winv = w.inverse();
    let s_n = ray.time_in_frame(&winv.apply_proj(&ray.backward), &winv.apply_proj(&ray.forward), x);
    let (lo, hi) = if s_n >= 0.0 { (0.0, s_n) } else { (s_n, 0.0) };
    Ok(crossings(&ray, lo, hi, collection, backend)?
        .iter()
        .filter(|r| r.midpoint_time >= lo && r.midpoint_time <= hi)
        .map(|r| r.excursion.powf(k))
        .sum())
}

/// Geometric grid `t_j = base · 2ʲ`, `j = 0..=j_max`.
pub fn doubling_grid(base: f64, j_max: u32) -> Vec<f64> {
    (0..=j_max).map(|j| base * 2f64.powi(j as i32)).collect()
}

/// Default time grid `250 · 2ʲ`, `j ≤ 5`.
pub fn default_grid() -> Vec<f64> {
    doubling_grid(250.0, 5)
}

/// `𝓔⁽ᵏ⁾(γ, t)/t` along a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionSeries {
    pub k: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub ratios: Vec<f64>,
    pub truncation_bounds: Vec<f64>,
    pub n_horoballs: Vec<usize>,
    pub effective_times: Vec<f64>,
}

/// Heuristic reading of a ratio series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Relative change over the last doubling below the tolerance.
    Plateau,
    /// Strictly increasing over at least three doublings.
    Growing,
    Undetermined,
}

impl ExcursionSeries {
    /// `|r_last − r_prev| / r_prev`.
    pub fn last_relative_change(&self) -> Option<f64> {
        relative_change(&self.ratios)
    }

    pub fn trend(&self, tolerance: f64) -> Trend {
        classify(&self.ratios, tolerance)
    }
}

pub fn relative_change(ratios: &[f64]) -> Option<f64> {
    match ratios {
        [.., a, b] if *a > 0.0 => Some((b - a).abs() / a),
        _ => None,
    }
}

/// Whether the last `steps + 1` entries increase strictly.
pub fn increasing_over(ratios: &[f64], steps: usize) -> bool {
    ratios.len() > steps && ratios[ratios.len() - steps - 1..].windows(2).all(|w| w[1] > w[0])
}

pub fn classify(ratios: &[f64], tolerance: f64) -> Trend {
    if increasing_over(ratios, 3) && relative_change(ratios).map(|c| c >= tolerance).unwrap_or(true) {
        Trend::Growing
    } else if relative_change(ratios).map(|c| c < tolerance).unwrap_or(false) {
        Trend::Plateau
    } else {
        Trend::Undetermined
    }
}

/// One series per exponent, all read off a single enumeration up to the last
/// grid time.
pub fn rho_series_multi(
    ray: &ExactGeodesic,
    ks: &[f64],
    grid: &[f64],
    collection: &HoroballCollection,
    eps: f64,
    backend: Backend,
) -> Result<Vec<ExcursionSeries>> {
    for &k in ks {
        check_k(k)?;
    }
    check_eps(eps)?;
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("time grid must be positive and increasing".into()));
    }
    let t_max = grid.last().copied().unwrap_or(0.0);
    let records = if t_max > 0.0 {
        crossings(ray, 0.0, t_max, collection, backend)?
    } else {
        Vec::new()
    };
    check_start(&records)?;
    Ok(ks
        .iter()
        .map(|&k| {
            let sums: Vec<ExcursionSum> = grid.iter().map(|&t| summarize(&records, t, k, eps)).collect();
            ExcursionSeries {
                k,
                times: grid.to_vec(),
                values: sums.iter().map(|s| s.value).collect(),
                ratios: sums.iter().zip(grid).map(|(s, t)| s.value / t).collect(),
                truncation_bounds: sums.iter().map(|s| s.truncation_bound).collect(),
                n_horoballs: sums.iter().map(|s| s.n_horoballs).collect(),
                effective_times: sums.iter().map(|s| s.t_eff).collect(),
            }
        })
        .collect())
}

pub fn rho_series(
    ray: &ExactGeodesic,
    k: f64,
    grid: &[f64],
    collection: &HoroballCollection,
    eps: f64,
    backend: Backend,
) -> Result<ExcursionSeries> {
    Ok(rho_series_multi(ray, &[k], grid, collection, eps, backend)?.remove(0))
}

/// Length of the segment `[x, y]` with each horoball chord replaced by the
/// horospherical arc between its entry and exit points.
pub fn thick_distance(
    x: &InteriorPoint,
    y: &InteriorPoint,
    collection: &HoroballCollection,
    backend: Backend,
) -> Result<f64> {
    let d = hyp_distance(x, y);
    if d == 0.0 {
        return Ok(0.0);
    }
    let geo = geodesic_through(x, y)?;
    let ray = ExactGeodesic::from_geodesic(&geo)?;
    let records = crossings(&ray, 0.0, d, collection, backend)?;
    check_start(&records)?;
    if let Some(r) = records.iter().find(|r| r.t_entry < d && r.t_exit > d) {
        return Err(Error::WindowEndpointInHoroball {
            time: d,
            exit_time: r.t_exit,
        });
    }
    Ok(records.iter().fold(d, |acc, r| acc - r.chord + r.excursion))
}

/// `f_k(v) = x₁ᵏ` where `x₁` is the normalized cusp-chart height of the foot
/// point, and `1` in the thick part.
pub fn f_k_observable(v: &TangentVector, k: f64, collection: &HoroballCollection) -> Result<f64> {
    Ok(collection.depth(&v.foot)?.map(|x1| x1.powf(k)).unwrap_or(1.0))
}

/// `c_k = 2∫₀¹ uᵏ⁻¹ (1 − u²)^{−1/2} du = B(1/2, k/2)`.
pub fn c_k(k: f64) -> f64 {
    beta(0.5, 0.5 * k)
}

/// `∫₀ᵁ (1 − u²)^{k/2 − 1} du` for `|U| < 1`, odd in `U`.
fn sech_power_primitive(u: f64, k: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    let half = 0.5 * beta_reg(0.5, 0.5 * k, (u * u).min(1.0)) * c_k(k);
    half.copysign(u)
}

/// `∫ f_k` over the part `[s₁, s₂]` (times relative to the midpoint) of a
/// crossing with chord `ℓ`: in the horoball's chart `x₁(s) = cosh(ℓ/2) sech s`.
pub fn crossing_integral(chord: f64, s1: f64, s2: f64, k: f64) -> f64 {
    let apex = (0.5 * chord).cosh();
    let a = 0.5 * chord;
    let (s1, s2) = (s1.max(-a), s2.min(a));
    if s2 <= s1 {
        return 0.0;
    }
    apex.powf(k) * (sech_power_primitive(s2.tanh(), k) - sech_power_primitive(s1.tanh(), k))
}

/// `∫ f_k` over a full crossing with chord `ℓ`.
pub fn full_crossing_integral(chord: f64, k: f64) -> f64 {
    crossing_integral(chord, -0.5 * chord, 0.5 * chord, k)
}

/// `(1/t) ∫₀ᵗ f_k(φ_s v) ds` along the ray, integrated in closed form over
/// every horoball crossing; the thick part contributes its sojourn time.
pub fn birkhoff_average(
    ray: &ExactGeodesic,
    k: f64,
    t: f64,
    collection: &HoroballCollection,
    backend: Backend,
) -> Result<f64> {
    if !(k > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("need k > 0 and t > 0, got k = {k}, t = {t}")));
    }
    let records = crossings(ray, 0.0, t, collection, backend)?;
    let mut integral = t;
    for r in &records {
        let (a, b) = (r.t_entry.max(0.0), r.t_exit.min(t));
        if b <= a {
            continue;
        }
        integral -= b - a;
        integral += crossing_integral(r.chord, a - r.midpoint_time, b - r.midpoint_time, k);
    }
    Ok(integral / t)
}

/// Catalan's constant.
const CATALAN: f64 = 0.915_965_594_177_219;

/// `∫ f_k dλ̃` over the unit tangent bundle with normalized Liouville measure,
/// or `None` when it diverges (`k ≥ N − 1`). Available for the presets.
pub fn birkhoff_target(collection: &HoroballCollection, k: f64) -> Result<Option<f64>> {
    let CollectionSource::Lattice(preset) = &collection.source else {
        return Err(Error::UnsupportedCollection);
    };
    let h = collection.height;
    if h < 1.0 {
        return Err(Error::NotDisjoint(h));
    }
    match preset.kind {
        PresetKind::Psl2Z => {
            // Area π/3; the cusp region {y ≥ h} over a unit interval has area 1/h.
            if k >= 1.0 {
                return Ok(None);
            }
            let area = std::f64::consts::PI / 3.0;
            Ok(Some((area - 1.0 / h + 1.0 / (h * (1.0 - k))) / area))
        }
        PresetKind::Psl2Zi => {
            // Volume G/3; the cusp cross-section has area 1/2.
            if k >= 2.0 {
                return Ok(None);
            }
            let vol = CATALAN / 3.0;
            let cusp = 1.0 / (4.0 * h * h);
            Ok(Some((vol - cusp + cusp * 2.0 / (2.0 - k)) / vol))
        }
        PresetKind::Custom => Err(Error::UnsupportedCollection),
    }
}

/// Foot point uniformly distributed (hyperbolic volume) in the fundamental
/// domain of the preset.
pub fn sample_fundamental_domain<R: rand::Rng>(
    collection: &HoroballCollection,
    rng: &mut R,
) -> Result<InteriorPoint> {
    let CollectionSource::Lattice(preset) = &collection.source else {
        return Err(Error::UnsupportedCollection);
    };
    match preset.kind {
        PresetKind::Psl2Z => {
            // x has density ∝ (1 − x²)^{−1/2} on [−1/2, 1/2]; y ∝ y⁻² above the arc.
            let th = rng.random_range(-std::f64::consts::FRAC_PI_6..std::f64::consts::FRAC_PI_6);
            let x = th.sin();
            let u: f64 = 1.0 - rng.random::<f64>();
            Ok(InteriorPoint::h2(x, th.cos() / u))
        }
        PresetKind::Psl2Zi => loop {
            // z has density ∝ (1 − |z|²)⁻¹ on the unit square; y ∝ y⁻³ above the sphere.
            let (a, b): (f64, f64) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            let m = 1.0 - a * a - b * b;
            if rng.random::<f64>() < 0.5 / m {
                let u: f64 = 1.0 - rng.random::<f64>();
                return Ok(InteriorPoint::h3(a, b, m.sqrt() / u.sqrt()));
            }
        },
        PresetKind::Custom => Err(Error::UnsupportedCollection),
    }
}
