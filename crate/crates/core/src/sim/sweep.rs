use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Scheme, SimConfig};
use super::engine::run_replication;
use super::metrics::{summarize, MetricsRecord};
use crate::Result;

/// Column order of the results table.
pub const RESULT_COLUMNS: [&str; 12] = [
    "scheme",
    "lambda_ratio",
    "d",
    "beta",
    "alpha",
    "C_f",
    "seed_count",
    "mean_utility",
    "ci95",
    "hit_rate",
    "mean_epsilon",
    "failed_seeds",
];

/// One aggregated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub lambda_ratio: f64,
    pub d: usize,
    pub beta: f64,
    pub alpha: f64,
    pub c_f: f64,
    /// Successful replications.
    pub seed_count: usize,
    pub mean_utility: f64,
    pub ci95: f64,
    pub hit_rate: f64,
    pub mean_epsilon: f64,
    pub failed_seeds: Vec<u64>,
    #[serde(skip)]
    pub errors: Vec<String>,
}

impl SweepRow {
    pub fn from_records(cfg: &SimConfig, records: &[MetricsRecord], failures: Vec<(u64, String)>) -> Self {
        let util: Vec<f64> = records.iter().map(|r| r.mean_utility).collect();
        let u = summarize(&util);
        let mean_of = |xs: Vec<f64>| summarize(&xs).mean;
        SweepRow {
            scheme: cfg.sim.scheme,
            lambda_ratio: cfg.network.lambda_ratio(),
            d: cfg.caching.capacity,
            beta: cfg.caching.beta,
            alpha: cfg.alpha(),
            c_f: cfg.caching.fronthaul_capacity,
            seed_count: records.len(),
            mean_utility: u.mean,
            ci95: u.ci95,
            hit_rate: mean_of(records.iter().map(|r| r.hit_rate).collect()),
            mean_epsilon: mean_of(records.iter().map(|r| r.mean_epsilon).collect()),
            failed_seeds: failures.iter().map(|f| f.0).collect(),
            errors: failures.into_iter().map(|f| f.1).collect(),
        }
    }

    pub fn failed(&self) -> bool {
        !self.failed_seeds.is_empty()
    }
}

/// Runs every seed of `cfg` in parallel on the current rayon pool, keeping
/// seed order.
pub fn run_seeds(cfg: &SimConfig, seeds: &[u64]) -> Vec<(u64, Result<MetricsRecord>)> {
    seeds
        .par_iter()
        .map(|&seed| (seed, run_replication(cfg, seed)))
        .collect()
}

/// Runs all `(config, seed)` pairs and aggregates one row per config.
/// Failed replications are recorded in their row; the sweep continues.
pub fn sweep(grid: &[SimConfig], seeds: &[u64]) -> Vec<SweepRow> {
    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let results: Vec<(usize, u64, Result<MetricsRecord>)> = jobs
        .par_iter()
        .map(|&(c, s)| (c, s, run_replication(&grid[c], s)))
        .collect();
    let mut per_cell: Vec<(Vec<MetricsRecord>, Vec<(u64, String)>)> =
        (0..grid.len()).map(|_| (Vec::new(), Vec::new())).collect();
    for (c, s, r) in results {
        match r {
            Ok(rec) => per_cell[c].0.push(rec),
            Err(e) => {
                log::error!("cell {c} seed {s}: {e}");
                per_cell[c].1.push((s, e.to_string()));
            }
        }
    }
    grid.iter()
        .zip(per_cell)
        .map(|(cfg, (recs, fails))| SweepRow::from_records(cfg, &recs, fails))
        .collect()
}

/// Writes the results table with a header row; failed seeds are joined by `;`.
pub fn write_results_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "{}", RESULT_COLUMNS.join(","))?;
    for r in rows {
        let failed: Vec<String> = r.failed_seeds.iter().map(u64::to_string).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scheme,
            r.lambda_ratio,
            r.d,
            r.beta,
            r.alpha,
            r.c_f,
            r.seed_count,
            r.mean_utility,
            r.ci95,
            r.hit_rate,
            r.mean_epsilon,
            failed.join(";")
        )?;
    }
    Ok(())
}
