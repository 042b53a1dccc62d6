//! Static SVG figures from a results table.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use plotters::prelude::*;
use serde::Deserialize;

/// One row of the results table as read back from disk.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub lambda_ratio: f64,
    pub d: usize,
    pub beta: f64,
    pub alpha: f64,
    #[serde(rename = "C_f")]
    pub c_f: f64,
    pub seed_count: usize,
    pub mean_utility: f64,
    pub ci95: f64,
    pub hit_rate: f64,
    pub mean_epsilon: f64,
    #[serde(default)]
    pub failed_seeds: String,
}

/// Reads a results table; comment lines starting with `#` are skipped.
/// Errors name the offending row and its line in the file.
pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<ResultRow>().enumerate() {
        match rec {
            Ok(r) => rows.push(r),
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                bail!("malformed results row {} (line {line}): {e}", i + 1);
            }
        }
    }
    Ok(rows)
}

pub fn read_results_file(path: &Path) -> Result<Vec<ResultRow>> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_results(f).with_context(|| format!("reading {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    LambdaRatio,
    CacheSize,
    Beta,
}

impl Axis {
    const ALL: [Axis; 3] = [Axis::LambdaRatio, Axis::CacheSize, Axis::Beta];

    pub fn column(self) -> &'static str {
        match self {
            Axis::LambdaRatio => "lambda_ratio",
            Axis::CacheSize => "d",
            Axis::Beta => "beta",
        }
    }

    fn value(self, r: &ResultRow) -> f64 {
        match self {
            Axis::LambdaRatio => r.lambda_ratio,
            Axis::CacheSize => r.d as f64,
            Axis::Beta => r.beta,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Axis::LambdaRatio => "SBS density / UE density",
            Axis::CacheSize => "Cache size d",
            Axis::Beta => "Local/global tradeoff beta",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Axis::LambdaRatio => "vs SBS density/UE density",
            Axis::CacheSize => "vs cache size",
            Axis::Beta => "vs local/global tradeoff",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.column() == s)
            .ok_or_else(|| anyhow::anyhow!("unknown x axis `{s}` (expected lambda_ratio, d or beta)"))
    }
}

#[derive(Debug, Clone, Copy)]
enum Metric {
    Utility,
    HitRate,
    Epsilon,
}

impl Metric {
    const ALL: [Metric; 3] = [Metric::Utility, Metric::HitRate, Metric::Epsilon];

    fn column(self) -> &'static str {
        match self {
            Metric::Utility => "mean_utility",
            Metric::HitRate => "hit_rate",
            Metric::Epsilon => "mean_epsilon",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::Utility => "Average utility per SBS",
            Metric::HitRate => "Cache hit rate",
            Metric::Epsilon => "Mean update factor epsilon",
        }
    }

    fn value(self, r: &ResultRow) -> (f64, f64) {
        match self {
            Metric::Utility => (r.mean_utility, r.ci95),
            Metric::HitRate => (r.hit_rate, 0.0),
            Metric::Epsilon => (r.mean_epsilon, 0.0),
        }
    }
}

fn distinct(rows: &[ResultRow], f: impl Fn(&ResultRow) -> f64) -> usize {
    let mut v: Vec<f64> = rows.iter().map(f).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// First of `lambda_ratio`, `d`, `beta` that takes more than one value.
pub fn pick_axis(rows: &[ResultRow]) -> Option<Axis> {
    Axis::ALL
        .into_iter()
        .find(|a| distinct(rows, |r| a.value(r)) > 1)
}

type Column = (&'static str, fn(&ResultRow) -> f64);

/// Curve name: the scheme plus every other varying column.
fn series_key(r: &ResultRow, x: Axis, varying: &[Column]) -> String {
    let mut key = r.scheme.clone();
    for (name, f) in varying {
        if *name != x.column() {
            key.push_str(&format!(" {name}={}", f(r)));
        }
    }
    key
}

/// Renders one SVG per metric into `out_dir`; returns the written paths.
pub fn plot_results(
    rows: &[ResultRow],
    x: Option<Axis>,
    out_dir: &Path,
    stem: &str,
    overwrite: bool,
) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        bail!("results table has no rows");
    }
    let x = match x.or_else(|| pick_axis(rows)) {
        Some(x) => x,
        None => bail!("no column among lambda_ratio, d, beta varies; pass --x"),
    };
    let columns: [Column; 5] = [
        ("lambda_ratio", |r| r.lambda_ratio),
        ("d", |r| r.d as f64),
        ("beta", |r| r.beta),
        ("alpha", |r| r.alpha),
        ("C_f", |r| r.c_f),
    ];
    let varying: Vec<_> = columns
        .into_iter()
        .filter(|(_, f)| distinct(rows, f) > 1)
        .collect();
    let mut series: BTreeMap<String, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        series.entry(series_key(r, x, &varying)).or_default().push(r);
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| x.value(a).total_cmp(&x.value(b)));
    }

    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for metric in Metric::ALL {
        let path = out_dir.join(format!("{stem}_{}_vs_{}.svg", metric.column(), x.column()));
        if path.exists() && !overwrite {
            bail!("{} already exists (pass --overwrite to replace it)", path.display());
        }
        draw(&path, x, metric, &series).with_context(|| format!("drawing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

fn draw(path: &Path, x: Axis, metric: Metric, series: &BTreeMap<String, Vec<&ResultRow>>) -> Result<()> {
    let all: Vec<&ResultRow> = series.values().flatten().copied().collect();
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in &all {
        let xv = x.value(r);
        let (y, ci) = metric.value(r);
        x0 = x0.min(xv);
        x1 = x1.max(xv);
        y0 = y0.min(y - ci);
        y1 = y1.max(y + ci);
    }
    let pad = |lo: f64, hi: f64| {
        let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
        (lo - 0.05 * span, hi + 0.05 * span)
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);

    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("{} {}", metric.label(), x.title()), ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(64)
        .build_cartesian_2d(x0..x1, y0..y1)?;
    chart
        .configure_mesh()
        .x_desc(x.label())
        .y_desc(metric.label())
        .draw()?;

    for (i, (name, pts)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let line: Vec<(f64, f64)> = pts.iter().map(|r| (x.value(r), metric.value(r).0)).collect();
        chart
            .draw_series(LineSeries::new(line.clone(), color.stroke_width(2)))?
            .label(name.clone())
            .legend(move |(lx, ly)| PathElement::new(vec![(lx, ly), (lx + 18, ly)], color.stroke_width(2)));
        chart.draw_series(line.iter().map(|&p| Circle::new(p, 3, color.filled())))?;
        chart.draw_series(pts.iter().filter(|r| metric.value(r).1 > 0.0).map(|r| {
            let (y, ci) = metric.value(r);
            let xv = x.value(r);
            PathElement::new(vec![(xv, y - ci), (xv, y + ci)], color)
        }))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .position(SeriesLabelPosition::UpperRight)
        .draw()?;
    root.present()?;
    Ok(())
}
