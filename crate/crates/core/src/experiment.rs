//! Seeded, parallel drivers for the excursion-growth and Birkhoff experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excursion::{birkhoff_average, rho_series_multi, sample_fundamental_domain, ExcursionSeries};
use crate::horoworld::{Backend, HoroballCollection};
use crate::hypgeom::InteriorPoint;
use crate::lattice::preset;
use crate::samplers::{
    lebesgue_ray, random_walk_ray, ConvergenceThresholds, RayDiagnostics, RayKind, StepMeasure,
};

/// Random stream for one trial of one sampler kind. Streams of different
/// kinds and trials are independent.
pub fn trial_rng(seed: u64, kind: RayKind, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = match kind {
        RayKind::RandomWalk => 0u64,
        RayKind::Lebesgue => 1,
    };
    rng.set_stream((k << 32) | trial as u64);
    rng
}

/// One run of the excursion-growth experiment.
#[derive(Clone, Debug)]
pub struct DichotomySpec {
    pub collection: HoroballCollection,
    pub measure: StepMeasure,
    pub base: InteriorPoint,
    pub ks: Vec<f64>,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub eps: f64,
    pub backend: Backend,
    pub kinds: Vec<RayKind>,
    pub thresholds: ConvergenceThresholds,
}

impl DichotomySpec {
    /// Default measure, base point `(0; 1)`, both sampler kinds.
    pub fn for_preset(name: &str, h: f64, ks: Vec<f64>, grid: Vec<f64>, trials: usize, seed: u64) -> Result<Self> {
        let p = preset(name)?;
        let base = if p.dimension() == 2 {
            InteriorPoint::h2(0.0, 1.0)
        } else {
            InteriorPoint::h3(0.0, 0.0, 1.0)
        };
        Ok(DichotomySpec {
            measure: StepMeasure::default_for(&p)?,
            collection: HoroballCollection::lattice(p, h)?,
            base,
            ks,
            grid,
            trials,
            seed,
            eps: crate::horoworld::DEFAULT_EPSILON,
            backend: Backend::Cf,
            kinds: vec![RayKind::RandomWalk, RayKind::Lebesgue],
            thresholds: ConvergenceThresholds::default(),
        })
    }
}

/// Series of one trial and sampler kind, one per exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSeries {
    pub trial: usize,
    pub kind: RayKind,
    pub series: Vec<ExcursionSeries>,
    pub diagnostics: RayDiagnostics,
}

/// Runs one trial of one kind.
pub fn run_trial(spec: &DichotomySpec, kind: RayKind, trial: usize) -> Result<TrialSeries> {
    let t_max = spec.grid.last().copied().unwrap_or(0.0);
    let mut rng = trial_rng(spec.seed, kind, trial);
    let ray = match kind {
        RayKind::RandomWalk => random_walk_ray(&spec.measure, &spec.base, t_max, &mut rng, &spec.thresholds)?,
        RayKind::Lebesgue => lebesgue_ray(&spec.base, spec.collection.dimension(), t_max, &mut rng)?,
    };
    let series = rho_series_multi(&ray.ray, &spec.ks, &spec.grid, &spec.collection, spec.eps, spec.backend)?;
    Ok(TrialSeries {
        trial,
        kind,
        series,
        diagnostics: ray.diagnostics,
    })
}

/// All trials, ordered by kind then trial. Independent of the thread count.
pub fn run_dichotomy(spec: &DichotomySpec) -> Result<Vec<TrialSeries>> {
    if spec.trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let jobs: Vec<(RayKind, usize)> = spec
        .kinds
        .iter()
        .flat_map(|&k| (0..spec.trials).map(move |t| (k, t)))
        .collect();
    jobs.into_par_iter()
        .map(|(kind, trial)| run_trial(spec, kind, trial))
        .collect()
}

/// Linear-interpolated sample quantile, `q ∈ [0, 1]`. `NaN` for empty input.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Median ratio `𝓔⁽ᵏ⁾(γ, t)/t` at every grid time, over the trials of `kind`.
pub fn median_ratios(results: &[TrialSeries], kind: RayKind, k: f64) -> Vec<f64> {
    let picked: Vec<&ExcursionSeries> = results
        .iter()
        .filter(|r| r.kind == kind)
        .filter_map(|r| r.series.iter().find(|s| s.k == k))
        .collect();
    let n = picked.first().map(|s| s.ratios.len()).unwrap_or(0);
    (0..n)
        .map(|j| median(&picked.iter().map(|s| s.ratios[j]).collect::<Vec<_>>()))
        .collect()
}

/// Flow averages of `f_k` along geodesics with Liouville-distributed initial vectors.
#[derive(Clone, Debug)]
pub struct BirkhoffSpec {
    pub collection: HoroballCollection,
    pub ks: Vec<f64>,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub backend: Backend,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffRow {
    pub trial: usize,
    pub k: f64,
    pub t: f64,
    pub average: f64,
}

/// Rows ordered by trial, then `k`, then `t`.
pub fn run_birkhoff(spec: &BirkhoffSpec) -> Result<Vec<BirkhoffRow>> {
    if spec.trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let t_max = spec.grid.last().copied().unwrap_or(0.0);
    let dim = spec.collection.dimension();
    let per_trial: Vec<Vec<BirkhoffRow>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<BirkhoffRow>> {
            let mut rng = trial_rng(spec.seed, RayKind::Lebesgue, trial);
            let x = sample_fundamental_domain(&spec.collection, &mut rng)?;
            let ray = lebesgue_ray(&x, dim, t_max, &mut rng)?;
            let mut rows = Vec::new();
            for &k in &spec.ks {
                for &t in &spec.grid {
                    rows.push(BirkhoffRow {
                        trial,
                        k,
                        t,
                        average: birkhoff_average(&ray.ray, k, t, &spec.collection, spec.backend)?,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

/// Median average per `(k, t)` in grid order.
pub fn birkhoff_medians(rows: &[BirkhoffRow], k: f64, grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&t| {
            median(
                &rows
                    .iter()
                    .filter(|r| r.k == k && r.t == t)
                    .map(|r| r.average)
                    .collect::<Vec<_>>(),
            )
        })
        .collect()
}
