//! Random boundary points: random-walk rays (hitting measure), uniform
//! directions (Lebesgue measure), drift and return-time statistics.

use num_bigint::BigInt;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{UnitCircle, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{dyadic, GaussInt, ProjPoint};
use crate::horoworld::{crossings, Backend, ExactGeodesic, HoroballCollection};
use crate::hypgeom::{hyp_distance, BoundaryPoint, InteriorPoint, TangentVector};
use crate::lattice::{reaches_within, GroupElement, GroupPreset, PresetKind, DEFAULT_MAX_BITS};

/// Extra depth, beyond the longest time of interest, to which random-walk
/// endpoints are resolved.
pub const DEPTH_MARGIN: f64 = 30.0;

/// Finitely supported probability measure on the group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMeasure {
    pub support: Vec<(GroupElement, f64)>,
}

impl StepMeasure {
    pub fn new(support: Vec<(GroupElement, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        if let Some((g, p)) = support.iter().find(|(_, p)| !(*p > 0.0)) {
            return Err(Error::InvalidMeasure(format!("non-positive weight {p} on {g:?}")));
        }
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(StepMeasure { support })
    }

    pub fn uniform(elements: Vec<GroupElement>) -> Result<Self> {
        let p = 1.0 / elements.len() as f64;
        StepMeasure::new(elements.into_iter().map(|g| (g, p)).collect())
    }

    pub fn point_mass(g: GroupElement) -> Self {
        StepMeasure {
            support: vec![(g, 1.0)],
        }
    }

    /// Uniform on `{S, T, T⁻¹}` (psl2z) or `{S, T, T⁻¹, U, U⁻¹}` (psl2zi).
    pub fn default_for(preset: &GroupPreset) -> Result<Self> {
        let mut gens = vec![GroupElement::s(), GroupElement::t(), GroupElement::t().inverse()];
        match preset.kind {
            PresetKind::Psl2Z => {}
            PresetKind::Psl2Zi => {
                gens.push(GroupElement::u());
                gens.push(GroupElement::u().inverse());
            }
            PresetKind::Custom => gens = preset.symmetric_generators(),
        }
        StepMeasure::uniform(gens)
    }

    /// Heuristic generation check: products of support elements reach every
    /// generator of the preset within six steps.
    pub fn generates(&self, preset: &GroupPreset) -> bool {
        let support: Vec<GroupElement> = self.support.iter().map(|(g, _)| g.clone()).collect();
        let targets: Vec<GroupElement> = preset.generators.iter().map(|g| g.element.clone()).collect();
        reaches_within(&support, &targets, 6)
    }

    /// Logs a warning if [`StepMeasure::generates`] fails.
    pub fn check_generating(&self, preset: &GroupPreset) -> bool {
        let ok = self.generates(preset);
        if !ok {
            log::warn!("step measure may not generate {}", preset.name);
        }
        ok
    }

    fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(self.support.iter().map(|(_, p)| *p)).expect("validated weights")
    }
}

/// `w₀ = id, w_k = w_{k−1} g_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub seed: u64,
    pub increments: Vec<GroupElement>,
    pub positions: Vec<GroupElement>,
}

pub fn sample_walk(mu: &StepMeasure, n_steps: usize, seed: u64) -> Result<SamplePath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut path = sample_walk_with(mu, n_steps, &mut rng)?;
    path.seed = seed;
    Ok(path)
}

pub fn sample_walk_with<R: Rng>(mu: &StepMeasure, n_steps: usize, rng: &mut R) -> Result<SamplePath> {
    let idx = mu.sampler();
    let mut increments = Vec::with_capacity(n_steps);
    let mut positions = Vec::with_capacity(n_steps + 1);
    positions.push(GroupElement::identity());
    for _ in 0..n_steps {
        let g = mu.support[idx.sample(rng)].0.clone();
        let w = positions.last().unwrap().checked_multiply(&g, DEFAULT_MAX_BITS)?;
        increments.push(g);
        positions.push(w);
    }
    Ok(SamplePath {
        seed: 0,
        increments,
        positions,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RayKind {
    #[serde(rename = "rw")]
    RandomWalk,
    Lebesgue,
}

impl RayKind {
    pub fn label(&self) -> &'static str {
        match self {
            RayKind::RandomWalk => "rw",
            RayKind::Lebesgue => "lebesgue",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayDiagnostics {
    pub steps: usize,
    /// Euclidean distance between the endpoint estimates at `N/2` and `N`.
    pub endpoint_drift: f64,
    /// Hyperbolic distance from `w_N x` to the ray `[x, ξ̂)`.
    pub tracking_distance: f64,
    /// Bit length of the exact endpoint.
    pub bits: u64,
}

/// Thresholds for accepting a random-walk endpoint estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceThresholds {
    pub endpoint_drift: f64,
    pub tracking_distance: f64,
}

impl Default for ConvergenceThresholds {
    fn default() -> Self {
        ConvergenceThresholds {
            endpoint_drift: 1e-6,
            tracking_distance: 3.0,
        }
    }
}

/// A sampled ray from a base point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaySample {
    pub kind: RayKind,
    pub endpoint: BoundaryPoint,
    pub ray: ExactGeodesic,
    pub diagnostics: RayDiagnostics,
}

/// The exact geodesic through (the dyadic value of) `x` with forward endpoint
/// `xi`; the backward endpoint is rounded to a float.
pub fn ray_from(x: &InteriorPoint, xi: &ProjPoint) -> Result<ExactGeodesic> {
    let back = if xi.is_infinity() {
        BoundaryPoint::Finite(x.horizontal)
    } else {
        // ξ⁻ = z₀ − y₀² / conj(ξ⁺ − z₀), evaluated exactly.
        let (z, kz) = dyadic(x.horizontal);
        let (y, ky) = dyadic(Complex64::new(x.height, 0.0));
        let k = kz.max(ky) as usize;
        let z = shl(&z, k - kz as usize);
        let y = shl(&y, k - ky as usize);
        let m = &shl(&xi.z, k) - &(&z * &xi.w);
        let mc = m.conj();
        if mc.is_zero() {
            BoundaryPoint::Infinity
        } else {
            let y2 = &y * &y;
            let num = &(&z * &mc) - &(&y2 * &xi.w.conj());
            ProjPoint::new(num, shl(&mc, k)).to_boundary()
        }
    };
    ExactGeodesic::new(ProjPoint::from_boundary(&back), xi.clone(), *x)
}

fn shl(g: &GaussInt, k: usize) -> GaussInt {
    GaussInt {
        re: &g.re << k,
        im: &g.im << k,
    }
}

fn chordal_or_euclid(a: &BoundaryPoint, b: &BoundaryPoint) -> f64 {
    match (a, b) {
        (BoundaryPoint::Finite(x), BoundaryPoint::Finite(y)) => (x - y).norm(),
        (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => 0.0,
        _ => f64::INFINITY,
    }
}

/// Distance from `w x` to the ray, evaluated in the frame of `w`.
fn tracking_distance(ray: &ExactGeodesic, w: &GroupElement, x: &InteriorPoint) -> Result<f64> {
    let winv = w.inverse();
    let geo = ray.frame_geodesic(&winv.apply_proj(&ray.backward), &winv.apply_proj(&ray.forward))?;
    let t = geo.time_of(x).max(0.0);
    Ok(hyp_distance(x, &geo.point(t)))
}

fn diagnose(
    w_half: &GroupElement,
    w: &GroupElement,
    steps: usize,
    x: &InteriorPoint,
    thresholds: &ConvergenceThresholds,
) -> Result<RaySample> {
    let xi = w.image_of_infinity();
    if xi.is_infinity() {
        return Err(Error::NotConverged(format!(
            "w_{steps} fixes ∞; the walk is not escaping to a generic boundary point"
        )));
    }
    let endpoint = xi.to_boundary();
    let drift = chordal_or_euclid(&w_half.image_of_infinity().to_boundary(), &endpoint);
    let ray = ray_from(x, &xi)?;
    let tracking = tracking_distance(&ray, w, x)?;
    let diagnostics = RayDiagnostics {
        steps,
        endpoint_drift: drift,
        tracking_distance: tracking,
        bits: xi.bits(),
    };
    if !(drift < thresholds.endpoint_drift) || !(tracking < thresholds.tracking_distance) {
        return Err(Error::NotConverged(format!(
            "endpoint drift {drift:e}, tracking distance {tracking:.3} after {steps} steps"
        )));
    }
    Ok(RaySample {
        kind: RayKind::RandomWalk,
        endpoint,
        ray,
        diagnostics,
    })
}

/// Endpoint estimate `ξ̂ = w_N·∞ = a/c` from a sampled path, with diagnostics.
pub fn approx_forward_boundary(path: &SamplePath, x: &InteriorPoint) -> Result<RaySample> {
    approx_forward_boundary_with(path, x, &ConvergenceThresholds::default())
}

pub fn approx_forward_boundary_with(
    path: &SamplePath,
    x: &InteriorPoint,
    thresholds: &ConvergenceThresholds,
) -> Result<RaySample> {
    let n = path.positions.len() - 1;
    diagnose(&path.positions[n / 2], &path.positions[n], n, x, thresholds)
}

/// Random-walk ray resolved to depth `t_max`: the walk runs until
/// `log‖w_N‖² ≥ t_max + DEPTH_MARGIN`, and the ray from `x` to `w_N·∞` is
/// returned. While the diagnostics fail the walk is extended, up to
/// `MAX_EXTENSIONS` times by 10% of its length.
pub fn random_walk_ray<R: Rng>(
    mu: &StepMeasure,
    x: &InteriorPoint,
    t_max: f64,
    rng: &mut R,
    thresholds: &ConvergenceThresholds,
) -> Result<RaySample> {
    let idx = mu.sampler();
    let target = t_max + DEPTH_MARGIN;
    let mut steps: Vec<u32> = Vec::new();
    let mut w = GroupElement::identity();
    let advance = |w: &mut GroupElement, steps: &mut Vec<u32>, rng: &mut R| -> Result<()> {
        let i = idx.sample(rng);
        *w = w.checked_multiply(&mu.support[i].0, DEFAULT_MAX_BITS)?;
        steps.push(i as u32);
        Ok(())
    };
    while w.ln_frobenius_sq() < target {
        advance(&mut w, &mut steps, rng)?;
        if steps.len() >= MAX_WALK {
            return Err(Error::NotConverged(format!("no escape after {MAX_WALK} steps")));
        }
    }
    let mut extensions = 0;
    loop {
        let n = steps.len();
        let w_half = steps[..n / 2]
            .iter()
            .fold(GroupElement::identity(), |a, &i| a.multiply(&mu.support[i as usize].0));
        match diagnose(&w_half, &w, n, x, thresholds) {
            Err(Error::NotConverged(_)) if extensions < MAX_EXTENSIONS => {
                extensions += 1;
                for _ in 0..(n / 10).max(1) {
                    advance(&mut w, &mut steps, rng)?;
                }
            }
            other => return other,
        }
    }
}

const MAX_WALK: usize = 5_000_000;
pub const MAX_EXTENSIONS: usize = 20;

/// Uniformly distributed unit tangent direction at `x` (`dim` = 2 or 3).
pub fn uniform_direction<R: Rng>(x: &InteriorPoint, dim: usize, rng: &mut R) -> TangentVector {
    if dim == 2 {
        let [a, b]: [f64; 2] = UnitCircle.sample(rng);
        TangentVector::new(*x, Complex64::new(a, 0.0), b)
    } else {
        let [a, b, c]: [f64; 3] = UnitSphere.sample(rng);
        TangentVector::new(*x, Complex64::new(a, b), c)
    }
}

/// Refines a float boundary point with `extra_bits` uniformly random low-order
/// bits, so that the exact endpoint is not a cusp of small height.
pub fn refine_endpoint<R: Rng>(xi: &BoundaryPoint, extra_bits: u32, dim: usize, rng: &mut R) -> ProjPoint {
    let BoundaryPoint::Finite(c) = xi else {
        return ProjPoint::infinity();
    };
    let (g, shift) = dyadic(*c);
    let e = extra_bits as usize;
    let random_part = |rng: &mut R| -> BigInt {
        let words = e.div_ceil(32);
        let mut v = BigInt::from(0u32);
        for _ in 0..words {
            v = (v << 32usize) + BigInt::from(rng.random::<u32>());
        }
        v >> (words * 32 - e)
    };
    let re = (&g.re << e) + random_part(rng);
    let im = if dim == 3 {
        (&g.im << e) + random_part(rng)
    } else {
        &g.im << e
    };
    ProjPoint::new(
        GaussInt { re, im },
        GaussInt::real(BigInt::from(1u32) << (shift as usize + e)),
    )
}

/// Bits appended to Lebesgue endpoints for rays followed up to time `t_max`.
pub fn lebesgue_bits(t_max: f64) -> u32 {
    (t_max.max(0.0) / std::f64::consts::LN_2).ceil() as u32 + 64
}

/// Ray from `x` in a uniformly random direction, resolved to depth `t_max`.
pub fn lebesgue_ray<R: Rng>(x: &InteriorPoint, dim: usize, t_max: f64, rng: &mut R) -> Result<RaySample> {
    let v = uniform_direction(x, dim, rng);
    let endpoint = v.forward_endpoint();
    let xi = refine_endpoint(&endpoint, lebesgue_bits(t_max), dim, rng);
    let ray = ray_from(x, &xi)?;
    Ok(RaySample {
        kind: RayKind::Lebesgue,
        endpoint,
        diagnostics: RayDiagnostics {
            steps: 0,
            endpoint_drift: 0.0,
            tracking_distance: 0.0,
            bits: xi.bits(),
        },
        ray,
    })
}

/// Forward endpoint of a uniformly random direction at `x`.
pub fn sample_lebesgue_direction(x: &InteriorPoint, dim: usize, seed: u64) -> Result<RaySample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    lebesgue_ray(x, dim, 0.0, &mut rng)
}

/// Mean of `d(x, w_n x)/n` over independent walks from `x = (0; 1)`.
pub fn estimate_drift(mu: &StepMeasure, n_steps: usize, trials: usize, seed: u64) -> Result<f64> {
    if n_steps == 0 || trials == 0 {
        return Err(Error::InvalidArgument("need n_steps ≥ 1 and trials ≥ 1".into()));
    }
    let idx = mu.sampler();
    let mut total = 0.0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let mut w = GroupElement::identity();
        for _ in 0..n_steps {
            w = w.checked_multiply(&mu.support[idx.sample(&mut rng)].0, DEFAULT_MAX_BITS)?;
        }
        total += w.displacement_at_origin() / n_steps as f64;
    }
    Ok(total / trials as f64)
}

/// Bi-infinite sample path truncated to `w_{−M} … w_N`, with
/// `w_n = w_{n−1} g_n` for all `n` (so `w_{−1} = g₀⁻¹`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedPath {
    /// `g₁, …, g_N`.
    pub forward: Vec<GroupElement>,
    /// `g₀, g₋₁, …, g_{−M+1}`.
    pub backward: Vec<GroupElement>,
    /// `w₀, …, w_N`.
    pub forward_positions: Vec<GroupElement>,
    /// `w₀, w₋₁, …, w_{−M}`.
    pub backward_positions: Vec<GroupElement>,
}

impl TwoSidedPath {
    pub fn from_increments(forward: Vec<GroupElement>, backward: Vec<GroupElement>) -> Result<Self> {
        let mut fp = vec![GroupElement::identity()];
        for g in &forward {
            fp.push(fp.last().unwrap().checked_multiply(g, DEFAULT_MAX_BITS)?);
        }
        let mut bp = vec![GroupElement::identity()];
        for g in &backward {
            bp.push(bp.last().unwrap().checked_multiply(&g.inverse(), DEFAULT_MAX_BITS)?);
        }
        Ok(TwoSidedPath {
            forward,
            backward,
            forward_positions: fp,
            backward_positions: bp,
        })
    }

    pub fn sample<R: Rng>(mu: &StepMeasure, n_forward: usize, n_backward: usize, rng: &mut R) -> Result<Self> {
        let idx = mu.sampler();
        let mut draw = |n: usize| -> Vec<GroupElement> {
            (0..n).map(|_| mu.support[idx.sample(rng)].0.clone()).collect()
        };
        let forward = draw(n_forward);
        let backward = draw(n_backward);
        TwoSidedPath::from_increments(forward, backward)
    }

    /// Samples the backward half until `log‖w_{−M}‖² ≥ depth`, then the
    /// forward half until `N ≥ min_forward` and `log‖w_N‖² ≥ depth`. Both
    /// endpoints of `γ_ω` are cusps, so `depth` bounds how far from `p₀` the
    /// truncated geodesic is faithful.
    pub fn sample_resolved<R: Rng>(
        mu: &StepMeasure,
        min_forward: usize,
        depth: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let idx = mu.sampler();
        let mut grow = |min: usize, inverse: bool| -> Result<Vec<GroupElement>> {
            let mut out = Vec::new();
            let mut w = GroupElement::identity();
            while out.len() < min || w.ln_frobenius_sq() < depth {
                let g = mu.support[idx.sample(rng)].0.clone();
                let step = if inverse { g.inverse() } else { g.clone() };
                w = w.checked_multiply(&step, DEFAULT_MAX_BITS)?;
                out.push(g);
                if out.len() >= MAX_WALK {
                    return Err(Error::NotConverged(format!("no escape after {MAX_WALK} steps")));
                }
            }
            Ok(out)
        };
        let backward = grow(0, true)?;
        let forward = grow(min_forward, false)?;
        TwoSidedPath::from_increments(forward, backward)
    }

    /// `w_n` for `−M ≤ n ≤ N`.
    pub fn position(&self, n: i64) -> &GroupElement {
        if n >= 0 {
            &self.forward_positions[n as usize]
        } else {
            &self.backward_positions[(-n) as usize]
        }
    }

    pub fn n_forward(&self) -> usize {
        self.forward.len()
    }

    /// The shifted path `σⁿω`, whose increments are `g_{k+n}`.
    pub fn shifted(&self, n: usize) -> Result<TwoSidedPath> {
        let n = n.min(self.forward.len());
        let forward = self.forward[n..].to_vec();
        let mut backward: Vec<GroupElement> = self.forward[..n].iter().rev().cloned().collect();
        backward.extend(self.backward.iter().cloned());
        TwoSidedPath::from_increments(forward, backward)
    }

    /// `γ_ω = [w_{−M}·∞, w_N·∞]`, with time 0 at the projection of `x`.
    pub fn geodesic(&self, x: &InteriorPoint) -> Result<ExactGeodesic> {
        let back = self.backward_positions.last().unwrap().image_of_infinity();
        let fwd = self.forward_positions.last().unwrap().image_of_infinity();
        ExactGeodesic::new(back, fwd, *x)
    }

    /// Times `s_j` of the projections `p_j` of `w_j x` onto `γ_ω`, for `0 ≤ j ≤ N`.
    pub fn projection_times(&self, ray: &ExactGeodesic, x: &InteriorPoint) -> Vec<f64> {
        self.forward_positions
            .iter()
            .map(|w| {
                let winv = w.inverse();
                ray.time_in_frame(&winv.apply_proj(&ray.backward), &winv.apply_proj(&ray.forward), x)
            })
            .collect()
    }

    /// `log‖w_{−M}‖²` and `log‖w_N‖²`, measuring how well the truncation resolves `γ_ω`.
    pub fn resolution(&self) -> (f64, f64) {
        (
            self.backward_positions.last().unwrap().ln_frobenius_sq(),
            self.forward_positions.last().unwrap().ln_frobenius_sq(),
        )
    }
}

/// Empirical tail `P̂(τ ≥ n)` of the return time with a log-linear fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnTimeTail {
    pub trials: usize,
    pub tail: Vec<f64>,
    /// 95% Wilson intervals.
    pub ci: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Trials where `p₀` was within `1e-6` of a horosphere.
    pub boundary_flags: usize,
}

/// `τ(ω)`: first `k ≥ 0` such that `p_k` lies beyond the exit of the horoball
/// containing `p₀` (0 if `p₀` is in the thick part). `None` if not reached
/// within the path.
pub fn return_time(
    path: &TwoSidedPath,
    x: &InteriorPoint,
    collection: &HoroballCollection,
) -> Result<(Option<usize>, bool)> {
    let ray = path.geodesic(x)?;
    let around = crossings(&ray, 0.0, 0.0, collection, Backend::Cf)?;
    let Some(h) = around.iter().find(|r| r.t_entry <= 0.0 && r.t_exit >= 0.0) else {
        return Ok((Some(0), false));
    };
    let near_boundary = h.t_entry.abs() < 1e-6 || h.t_exit.abs() < 1e-6;
    let times = path.projection_times(&ray, x);
    Ok((times.iter().position(|&s| s >= h.t_exit), near_boundary))
}

fn wilson(p: f64, n: f64) -> (f64, f64) {
    let z = 1.96f64;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept, R²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

const RETURN_TIME_DEPTH: f64 = 40.0;

/// Samples `trials` two-sided paths and tabulates `P̂(τ ≥ n)` for `n ≤ n_max`;
/// the fit uses the positive entries of the log tail.
pub fn estimate_return_time_tail(
    mu: &StepMeasure,
    collection: &HoroballCollection,
    trials: usize,
    n_max: usize,
    seed: u64,
) -> Result<ReturnTimeTail> {
    use rayon::prelude::*;
    let x = InteriorPoint::h3(0.0, 0.0, 1.0);
    let outcomes: Vec<(usize, bool)> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<(usize, bool)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let mut depth = RETURN_TIME_DEPTH;
            loop {
                let mut r = rng.clone();
                let path = TwoSidedPath::sample_resolved(mu, n_max + 1, depth, &mut r)?;
                let (tau, flag) = return_time(&path, &x, collection)?;
                match tau {
                    Some(t) => return Ok((t, flag)),
                    None if depth >= 16.0 * RETURN_TIME_DEPTH => return Ok((usize::MAX, flag)),
                    None => depth *= 2.0,
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let n = trials as f64;
    let tail: Vec<f64> = (0..=n_max)
        .map(|k| outcomes.iter().filter(|(t, _)| *t >= k).count() as f64 / n)
        .collect();
    let ci = tail.iter().map(|&p| wilson(p, n)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(k, &p)| (k as f64, p.ln()))
        .unzip();
    let (slope, intercept, r_squared) = if xs.len() >= 2 {
        linear_fit(&xs, &ys)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(ReturnTimeTail {
        trials,
        tail,
        ci,
        slope,
        intercept,
        r_squared,
        boundary_flags: outcomes.iter().filter(|(_, f)| *f).count(),
    })
}

/// `d(w_n x, γ(L̂ n))/n` for `n = 1..=N`.
pub fn sublinear_tracking_diagnostic(
    path: &SamplePath,
    ray: &ExactGeodesic,
    x: &InteriorPoint,
    drift: f64,
) -> Result<Vec<f64>> {
    path.positions
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, w)| {
            let winv = w.inverse();
            let geo = ray.frame_geodesic(&winv.apply_proj(&ray.backward), &winv.apply_proj(&ray.forward))?;
            Ok(hyp_distance(x, &geo.point(drift * n as f64)) / n as f64)
        })
        .collect()
}
