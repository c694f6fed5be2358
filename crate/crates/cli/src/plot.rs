use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cuspex::experiment::{median, quantile};
use serde::Deserialize;

use crate::CliError;

pub const COLUMNS: [&str; 8] = [
    "trial",
    "kind",
    "k",
    "t",
    "excursion_sum",
    "ratio",
    "truncation_bound",
    "n_horoballs",
];

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;

#[derive(Debug, Deserialize)]
struct Row {
    kind: String,
    k: f64,
    t: f64,
    ratio: f64,
}

/// Median and interquartile range of the ratio at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub t: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

/// `(kind, k)` -> bands in increasing `t`.
pub type Curves = BTreeMap<(String, u64), Vec<Band>>;

pub fn read_curves(csv_path: &Path) -> Result<Curves, CliError> {
    let schema = |msg: String| CliError::Config(format!("{}: {msg}", csv_path.display()));
    let mut rdr = csv::Reader::from_path(csv_path).map_err(|e| schema(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| schema(e.to_string()))?.clone();
    if headers.is_empty() {
        return Err(schema("empty file".into()));
    }
    if headers.iter().collect::<Vec<_>>() != COLUMNS {
        return Err(schema(format!("expected columns {}", COLUMNS.join(","))));
    }
    let mut cells: BTreeMap<(String, u64), BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| schema(format!("row {}: {e}", i + 2)))?;
        if !(row.t > 0.0) || !(row.k > 0.0) {
            return Err(schema(format!("row {}: k and t must be positive", i + 2)));
        }
        cells
            .entry((row.kind, row.k.to_bits()))
            .or_default()
            .entry(row.t.to_bits())
            .or_default()
            .push(row.ratio);
    }
    if cells.is_empty() {
        return Err(schema("no data rows".into()));
    }
    Ok(cells
        .into_iter()
        .map(|(key, by_t)| {
            let bands = by_t
                .into_iter()
                .map(|(t, v)| Band {
                    t: f64::from_bits(t),
                    q25: quantile(&v, 0.25),
                    median: median(&v),
                    q75: quantile(&v, 0.75),
                })
                .collect();
            (key, bands)
        })
        .collect())
}

pub fn render_svg(curves: &Curves) -> String {
    let bands = curves.values().flatten();
    let (lo, hi) = bands
        .clone()
        .fold((f64::MAX, f64::MIN), |(a, b), s| (a.min(s.t.log2()), b.max(s.t.log2())));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let ymax = bands.fold(0.0f64, |m, s| m.max(s.q75)).max(f64::MIN_POSITIVE) * 1.05;
    let x = |t: f64| MARGIN + (t.log2() - lo) / span * (WIDTH - 2.0 * MARGIN);
    let y = |r: f64| HEIGHT - MARGIN - r / ymax * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    );
    let mut ts: Vec<f64> = curves.values().flatten().map(|b| b.t).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    for t in ts {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#,
            x(t),
            y0 + 18.0
        );
    }
    for i in 0..=4 {
        let r = ymax * i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{r:.3}</text>"#, x0 - 6.0, y(r) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t (log scale)</text>"#, WIDTH / 2.0, HEIGHT - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">median E(k)/t</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    for (i, ((kind, k), bands)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let k = f64::from_bits(*k);
        let upper = bands.iter().map(|b| format!("{:.2},{:.2}", x(b.t), y(b.q75)));
        let lower = bands.iter().rev().map(|b| format!("{:.2},{:.2}", x(b.t), y(b.q25)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = bands.iter().map(|b| format!("{:.2},{:.2}", x(b.t), y(b.median))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="median" data-kind="{kind}" data-k="{k}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" fill="{color}">{kind}, k = {k}</text>"#,
            WIDTH - MARGIN - 110.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `<out>/<csv stem>.svg`; nothing is written on error.
pub fn export(csv_path: &Path, out: &Path) -> Result<PathBuf, CliError> {
    let curves = read_curves(csv_path)?;
    let svg = render_svg(&curves);
    fs::create_dir_all(out)?;
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    let path = out.join(format!("{stem}.svg"));
    fs::write(&path, svg)?;
    Ok(path)
}
