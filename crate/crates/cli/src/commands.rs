use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use cuspex::excursion::birkhoff_target;
use cuspex::experiment::{median, quantile, run_birkhoff, run_dichotomy, BirkhoffSpec, DichotomySpec};
use cuspex::horoworld::excursion;
use cuspex::samplers::ConvergenceThresholds;
use cuspex::verify::{all_pass, lemma_suite_with, SuiteConfig};
use serde::Serialize;

use crate::config::{ExperimentConfig, Overrides, Purpose};
use crate::CliError;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// One row of the simulate CSV.
#[derive(Debug, Serialize)]
struct SeriesRow<'a> {
    trial: usize,
    kind: &'a str,
    k: f64,
    t: f64,
    excursion_sum: f64,
    ratio: f64,
    truncation_bound: f64,
    n_horoballs: usize,
}

#[derive(Debug, Serialize)]
struct MedianRow {
    kind: String,
    k: f64,
    t: f64,
    median_ratio: f64,
    q25_ratio: f64,
    q75_ratio: f64,
    median_excursion_sum: f64,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    schema_version: u32,
    config: &'a ExperimentConfig,
    medians: Vec<MedianRow>,
    max_tracking_distance: f64,
    max_endpoint_drift: f64,
}

/// (kind, k index, t index); values are (ratios, sums).
type Cell = (&'static str, usize, usize);

fn csv_error(e: csv::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn create_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))
}

pub fn simulate(config: &Path, over: &Overrides) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(config, over, Purpose::Simulate)?;
    let group = cfg.group()?;
    let spec = DichotomySpec {
        collection: cfg.collection(&group)?,
        measure: cfg.measure(&group)?,
        base: cfg.base(group.dimension()),
        ks: cfg.ks.clone(),
        grid: cfg.t_grid.clone(),
        trials: cfg.trials,
        seed: cfg.seed,
        eps: cfg.epsilon,
        backend: cfg.backend,
        kinds: cfg.kinds.clone(),
        thresholds: ConvergenceThresholds::default(),
    };
    let results = run_dichotomy(&spec)?;

    create_out(&cfg.out)?;
    let csv_path = cfg.out.join("series.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_error)?;
    let mut cells: BTreeMap<Cell, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in &results {
        for (ki, s) in r.series.iter().enumerate() {
            for j in 0..s.times.len() {
                w.serialize(SeriesRow {
                    trial: r.trial,
                    kind: r.kind.label(),
                    k: s.k,
                    t: s.times[j],
                    excursion_sum: s.values[j],
                    ratio: s.ratios[j],
                    truncation_bound: s.truncation_bounds[j],
                    n_horoballs: s.n_horoballs[j],
                })
                .map_err(csv_error)?;
                let cell = cells.entry((r.kind.label(), ki, j)).or_default();
                cell.0.push(s.ratios[j]);
                cell.1.push(s.values[j]);
            }
        }
    }
    w.flush()?;

    let medians = cells
        .into_iter()
        .map(|((kind, ki, j), (ratios, sums))| MedianRow {
            kind: kind.to_string(),
            k: cfg.ks[ki],
            t: cfg.t_grid[j],
            median_ratio: median(&ratios),
            q25_ratio: quantile(&ratios, 0.25),
            q75_ratio: quantile(&ratios, 0.75),
            median_excursion_sum: median(&sums),
        })
        .collect();
    let summary = Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        config: &cfg,
        medians,
        max_tracking_distance: results.iter().map(|r| r.diagnostics.tracking_distance).fold(0.0, f64::max),
        max_endpoint_drift: results.iter().map(|r| r.diagnostics.endpoint_drift).fold(0.0, f64::max),
    };
    let json_path = cfg.out.join("summary.json");
    fs::write(&json_path, serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct BirkhoffCsvRow {
    k: f64,
    t: f64,
    average: f64,
    target_or_inf: String,
}

#[derive(Debug, Serialize)]
struct BirkhoffTrialRow {
    trial: usize,
    k: f64,
    t: f64,
    average: f64,
}

pub fn birkhoff(config: &Path, over: &Overrides) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(config, over, Purpose::Birkhoff)?;
    let group = cfg.group()?;
    let collection = cfg.collection(&group)?;
    let targets = cfg
        .ks
        .iter()
        .map(|&k| birkhoff_target(&collection, k))
        .collect::<cuspex::Result<Vec<_>>>()
        .map_err(|e| CliError::Config(format!("no analytic target for this group: {e}")))?;
    let spec = BirkhoffSpec {
        collection,
        ks: cfg.ks.clone(),
        grid: cfg.t_grid.clone(),
        trials: cfg.trials,
        seed: cfg.seed,
        backend: cfg.backend,
    };
    let rows = run_birkhoff(&spec)?;

    create_out(&cfg.out)?;
    let path = cfg.out.join("birkhoff.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_error)?;
    for (&k, target) in cfg.ks.iter().zip(&targets) {
        for &t in &cfg.t_grid {
            let avgs: Vec<f64> = rows.iter().filter(|r| r.k == k && r.t == t).map(|r| r.average).collect();
            w.serialize(BirkhoffCsvRow {
                k,
                t,
                average: median(&avgs),
                target_or_inf: target.map_or_else(|| "inf".to_string(), |v| v.to_string()),
            })
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    let trials_path = cfg.out.join("birkhoff_trials.csv");
    let mut w = csv::Writer::from_path(&trials_path).map_err(csv_error)?;
    for r in &rows {
        w.serialize(BirkhoffTrialRow {
            trial: r.trial,
            k: r.k,
            t: r.t,
            average: r.average,
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    println!("wrote {} and {}", path.display(), trials_path.display());
    Ok(())
}

pub fn verify(out: &Path, seed: u64, fit_trials: Option<usize>, inject_sign_error: bool) -> Result<(), CliError> {
    let mut cfg = SuiteConfig {
        seed,
        ..SuiteConfig::default()
    };
    if let Some(n) = fit_trials {
        cfg.fit_trials = n;
    }
    let reports = if inject_sign_error {
        lemma_suite_with(&cfg, &|g, h| excursion(g, h).map(|e| -e))
    } else {
        lemma_suite_with(&cfg, &|g, h| excursion(g, h))
    };
    create_out(out)?;
    let path = out.join("verify_report.json");
    fs::write(&path, serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n")?;
    for r in &reports {
        println!("{} {}", if r.pass { "PASS" } else { "FAIL" }, r.name);
    }
    println!("wrote {}", path.display());
    if all_pass(&reports) {
        Ok(())
    } else {
        let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
        Err(CliError::Verification(failed.join(", ")))
    }
}
