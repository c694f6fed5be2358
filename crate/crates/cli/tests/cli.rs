use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cuspex(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuspex"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn single_trial_single_time_gives_one_row_per_kind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"group": "psl2z", "h": 1.2, "ks": [1], "t_grid": [30], "trials": 1, "seed": 3}"#,
    );
    let out = cuspex(&["simulate", "--config", &cfg, "--out", "run"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("run/series.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "trial,kind,k,t,excursion_sum,ratio,truncation_bound,n_horoballs"
    );
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][1].as_str(), rows[1][1].as_str()), ("rw", "lebesgue"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["medians"].as_array().unwrap().len(), 2);
}

#[test]
fn reruns_are_byte_identical_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"group": "psl2z", "h": 1.2, "ks": [1, 2], "t_grid": [20, 40], "trials": 4, "seed": 11}"#,
    );
    let mut outputs = Vec::new();
    for (threads, name) in [("1", "a"), ("1", "b"), ("3", "c")] {
        let out = Command::new(env!("CARGO_BIN_EXE_cuspex"))
            .args(["simulate", "--config", &cfg, "--out", name])
            .env("CUSPEX_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((
            fs::read(dir.path().join(name).join("series.csv")).unwrap(),
            fs::read(dir.path().join(name).join("summary.json")).unwrap(),
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0].0 == w[1].0));
    // The summary embeds the output directory, so compare everything else.
    let strip = |b: &[u8]| {
        let mut v: serde_json::Value = serde_json::from_slice(b).unwrap();
        v["config"]["out"] = serde_json::Value::Null;
        v
    };
    assert!(outputs.windows(2).all(|w| strip(&w[0].1) == strip(&w[1].1)));
}

#[test]
fn seed_flag_changes_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"group": "psl2z", "h": 1.2, "ks": [1], "t_grid": [30], "trials": 3}"#,
    );
    cuspex(&["simulate", "--config", &cfg, "--out", "a", "--seed", "1"], dir.path());
    cuspex(&["simulate", "--config", &cfg, "--out", "b", "--seed", "2"], dir.path());
    let a = fs::read(dir.path().join("a/series.csv")).unwrap();
    let b = fs::read(dir.path().join("b/series.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn bianchi_group_with_two_exponents_gives_four_series_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"group": "psl2zi", "h": 1.2, "ks": [1, 2], "t_grid": [15, 30], "trials": 2, "backend": "bfs"}"#,
    );
    let out = cuspex(&["simulate", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&fs::read_to_string(dir.path().join("out/series.csv")).unwrap());
    for trial in ["0", "1"] {
        let mut series: Vec<(String, String)> = rows
            .iter()
            .filter(|r| r[0] == trial)
            .map(|r| (r[1].clone(), r[2].clone()))
            .collect();
        series.sort();
        series.dedup();
        assert_eq!(series.len(), 4);
    }
}

#[test]
fn invalid_configs_exit_with_code_one_and_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{\n  \"group\": \"psl2z\",\n  \"h\": 0.8,\n  \"ks\": [1],\n  \"t_grid\": [10],\n  \"trials\": 1\n}");
    let out = cuspex(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("config.json:3:"), "{err}");
    assert!(!dir.path().join("out").exists());

    let cfg = write_config(dir.path(), "{\n  \"group\": \"psl2z\"\n  \"h\": 1.2\n}");
    let out = cuspex(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config.json:3:"));

    let out = cuspex(&["simulate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_passes_and_reports_every_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = cuspex(&["verify", "--out", "v"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let reports: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("v/verify_report.json")).unwrap()).unwrap();
    let names: Vec<&str> = reports.as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    for suite in ["arc_length_excursion", "recurrence", "powers_k", "e_compute", "dist1", "enumeration_equivalence_psl2z"] {
        assert!(names.contains(&suite), "{names:?}");
    }
}

#[test]
fn verify_catches_a_sign_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = cuspex(&["verify", "--out", "v", "--inject-sign-error", "--fit-trials", "2000"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let reports: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("v/verify_report.json")).unwrap()).unwrap();
    let arc = reports.as_array().unwrap().iter().find(|r| r["name"] == "arc_length_excursion").unwrap();
    assert_eq!(arc["pass"], false);
}

fn birkhoff_rows(dir: &Path, body: &str) -> Vec<Vec<String>> {
    let cfg = write_config(dir, body);
    let out = cuspex(&["birkhoff", "--config", &cfg, "--out", "b"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("b/birkhoff.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "k,t,average,target_or_inf");
    data_rows(&csv)
}

#[test]
fn birkhoff_targets_are_finite_only_below_the_critical_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let rows = birkhoff_rows(
        dir.path(),
        r#"{"group": "psl2z", "h": 1.2, "ks": [0.5, 1], "t_grid": [50, 100], "trials": 3}"#,
    );
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let target = &r[3];
        if r[0] == "0.5" {
            let v: f64 = target.parse().unwrap();
            assert!(v.is_finite() && v > 1.0);
        } else {
            assert_eq!(target, "inf");
        }
    }
    let rows = birkhoff_rows(
        dir.path(),
        r#"{"group": "psl2zi", "h": 1.2, "ks": [2], "t_grid": [50], "trials": 2}"#,
    );
    assert_eq!(rows[0][3], "inf");
}

#[test]
fn export_plot_draws_one_polyline_per_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"group": "psl2z", "h": 1.2, "ks": [1, 2], "t_grid": [20, 40], "trials": 3}"#,
    );
    assert!(cuspex(&["simulate", "--config", &cfg], dir.path()).status.success());
    let out = cuspex(&["export-plot", "out/series.csv", "--out", "plots"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = fs::read_to_string(dir.path().join("plots/series.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);
    assert!(cuspex(&["export-plot", "out/series.csv", "--out", "plots2"], dir.path()).status.success());
    assert_eq!(svg, fs::read_to_string(dir.path().join("plots2/series.svg")).unwrap());
}

#[test]
fn export_plot_rejects_an_empty_csv() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.csv"), "").unwrap();
    let out = cuspex(&["export-plot", "empty.csv", "--out", "plots"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("plots/empty.svg").exists());
}
