use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use edgecache::sim::{
    run_replication_with, run_seeds, sweep, with_scheme, write_results_csv, Diagnostics, MetricsRecord, Scheme,
    SimConfig, SweepRow,
};

use crate::config::{parse_config, to_toml};
use crate::grid::parse_grid;
use crate::output::{config_hash, resolve_out_dir, RunManifest};
use crate::plot::{plot_results, read_results_file, Axis};

#[derive(Debug, Parser)]
#[command(name = "edgecache", version, about = "Cooperative edge caching simulator")]
pub struct Cli {
    /// Verbose logging.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one config across seeds.
    Run(RunArgs),
    /// Run every cell of a grid file.
    Sweep(SweepArgs),
    /// Render a results table into SVG figures.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory; defaults to a hashed name under $EDGECACHE_OUT or ./results.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Use seeds 1..=N.
    #[arg(long, value_name = "N", conflicts_with = "seed_list")]
    pub seeds: Option<u64>,
    /// Comma-separated seed list.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub seed_list: Option<Vec<u64>>,
    /// Worker threads for concurrent replications.
    #[arg(long, value_name = "K")]
    pub parallel: Option<usize>,
    /// Replace existing output files.
    #[arg(long)]
    pub overwrite: bool,
    /// Print what would run and exit.
    #[arg(long)]
    pub dry_run: bool,
    /// Also write event logs, learner trajectories, cache snapshots and partitions.
    #[arg(long)]
    pub debug_dumps: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Schemes to run, comma-separated, or `all`; defaults to `sim.scheme`.
    #[arg(long, value_name = "NAME", value_delimiter = ',')]
    pub scheme: Vec<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Grid file.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Crosses the grid with these schemes instead of each cell's `sim.scheme`.
    #[arg(long, value_name = "NAME", value_delimiter = ',')]
    pub scheme: Vec<String>,
    /// Exit successfully even if some cells failed.
    #[arg(long)]
    pub keep_going: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Results table written by `run` or `sweep`.
    pub results: PathBuf,
    /// Directory for the images; defaults to the table's directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// x axis: lambda_ratio, d or beta; picked from the data if omitted.
    #[arg(long)]
    pub x: Option<Axis>,
    #[arg(long)]
    pub overwrite: bool,
}

/// What a command did, for the caller's exit code.
#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub failed_cells: usize,
}

fn parse_schemes(names: &[String]) -> Result<Vec<Scheme>> {
    if names.iter().any(|n| n.eq_ignore_ascii_case("all")) {
        return Ok(Scheme::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| n.parse::<Scheme>().map_err(|e| anyhow!("{e}")))
        .collect()
}

fn resolve_seeds(common: &Common, cfg: &SimConfig) -> Result<Vec<u64>> {
    let seeds = match (&common.seeds, &common.seed_list) {
        (Some(n), _) => (1..=*n).collect(),
        (None, Some(list)) => list.clone(),
        (None, None) => cfg.sim.seeds.clone(),
    };
    if seeds.is_empty() {
        bail!("no seeds to run");
    }
    Ok(seeds)
}

fn with_pool<T: Send>(parallel: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(k) = parallel {
        if k == 0 {
            bail!("--parallel must be at least 1");
        }
        b = b.num_threads(k);
    }
    Ok(b.build()?.install(f))
}

fn records_csv(records: &[MetricsRecord]) -> Vec<u8> {
    let mut out = String::from(
        "scheme,seed,num_sbs,num_ues,mean_utility,requests,hits,hit_rate,no_requests,mean_epsilon,infeasible_updates,trace_digest\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scheme,
            r.seed,
            r.num_sbs,
            r.num_ues,
            r.mean_utility,
            r.requests,
            r.hits,
            r.hit_rate,
            r.no_requests,
            r.mean_epsilon,
            r.infeasible_updates,
            r.trace_digest
        ));
    }
    out.into_bytes()
}

fn results_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut body = Vec::new();
    write_results_csv(rows, &mut body)?;
    Ok(body)
}

fn dump_debug(manifest: &RunManifest, cfg: &SimConfig, seed: u64) -> Result<MetricsRecord> {
    let mut diag = Diagnostics::default();
    let rec = run_replication_with(cfg, seed, &mut diag)?;
    let dir = format!("debug/{}/seed-{seed}", cfg.sim.scheme);
    let mut events = Vec::new();
    diag.write_events(&mut events)?;
    manifest.write(&format!("{dir}/events.jsonl"), &events)?;
    manifest.write_csv(&format!("{dir}/caches.csv"), &diag.cache_snapshots)?;
    for (s, t) in diag.trajectories.iter().enumerate() {
        let mut body = Vec::new();
        t.write_csv(&mut body)?;
        manifest.write_csv(&format!("{dir}/trajectory-sbs{s}.csv"), &body)?;
    }
    if !diag.cloud_trajectory.is_empty() {
        let mut body = Vec::new();
        diag.cloud_trajectory.write_csv(&mut body)?;
        manifest.write_csv(&format!("{dir}/trajectory-cloud.csv"), &body)?;
    }
    for (slot, sbs, part) in &diag.partitions {
        let who = sbs.map(|s| format!("sbs{s}")).unwrap_or_else(|| "cloud".into());
        let mut body = Vec::new();
        part.write_csv(&mut body)?;
        manifest.write_csv(&format!("{dir}/partition-{who}-slot{slot}.csv"), &body)?;
    }
    Ok(rec)
}

pub fn cmd_run(args: &RunArgs) -> Result<Outcome> {
    let cfg = match &args.config {
        Some(p) => parse_config(p)?,
        None => SimConfig::default(),
    };
    let schemes = if args.scheme.is_empty() {
        vec![cfg.sim.scheme]
    } else {
        parse_schemes(&args.scheme)?
    };
    let seeds = resolve_seeds(&args.common, &cfg)?;
    let canonical = to_toml(&cfg);
    let hash = config_hash(&canonical);
    let manifest = RunManifest {
        config_path: args.config.clone(),
        out_dir: resolve_out_dir(args.common.out.as_deref(), &format!("run-{}", &hash[..12])),
        seeds: seeds.clone(),
        parallel: args.common.parallel,
        debug_dumps: args.common.debug_dumps,
        overwrite: args.common.overwrite,
        config_hash: hash,
    };

    if args.common.dry_run {
        let names: Vec<&str> = schemes.iter().map(|s| s.name()).collect();
        println!("schemes: {}", names.join(","));
        println!("seeds: {seeds:?}");
        println!("output: {}", manifest.out_dir.display());
        return Ok(Outcome::default());
    }
    manifest.check_targets(&["config.toml", "records.csv", "summary.csv"])?;
    manifest.prepare()?;

    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut failed = 0;
    for scheme in schemes {
        let c = with_scheme(&cfg, scheme);
        let results: Vec<(u64, Result<MetricsRecord, String>)> = if manifest.debug_dumps {
            seeds
                .iter()
                .map(|&s| (s, dump_debug(&manifest, &c, s).map_err(|e| format!("{e:#}"))))
                .collect()
        } else {
            with_pool(manifest.parallel, || run_seeds(&c, &seeds))?
                .into_iter()
                .map(|(s, r)| (s, r.map_err(|e| e.to_string())))
                .collect()
        };
        let mut ok = Vec::new();
        let mut fails = Vec::new();
        for (seed, r) in results {
            match r {
                Ok(rec) => ok.push(rec),
                Err(e) => {
                    log::error!("{scheme} seed {seed}: {e}");
                    fails.push((seed, e));
                }
            }
        }
        failed += fails.len();
        let row = SweepRow::from_records(&c, &ok, fails);
        println!(
            "{:<24} utility {:.6} +- {:.6}  hit {:.4}  eps {:.6}  seeds {}",
            scheme, row.mean_utility, row.ci95, row.hit_rate, row.mean_epsilon, row.seed_count
        );
        records.extend(ok);
        rows.push(row);
    }

    let mut out = Outcome {
        failed_cells: failed,
        ..Outcome::default()
    };
    out.written.push(manifest.write("config.toml", canonical.as_bytes())?);
    out.written.push(manifest.write_csv("records.csv", &records_csv(&records))?);
    out.written.push(manifest.write_csv("summary.csv", &results_csv(&rows)?)?);
    Ok(out)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Outcome> {
    let mut cells = parse_grid(&args.config)?;
    if !args.scheme.is_empty() {
        let schemes = parse_schemes(&args.scheme)?;
        cells = cells
            .into_iter()
            .flat_map(|c| {
                schemes.iter().map(move |&s| {
                    let mut c = c.clone();
                    c.config = with_scheme(&c.config, s);
                    c.overrides.push(("sim.scheme".into(), toml::Value::String(s.name().into())));
                    c
                })
            })
            .collect();
    }
    let seeds = resolve_seeds(&args.common, &cells[0].config)?;
    let src = std::fs::read_to_string(&args.config).with_context(|| args.config.display().to_string())?;
    let mut canonical = src.clone();
    for c in &cells {
        canonical.push_str(&to_toml(&c.config));
    }
    let hash = config_hash(&canonical);
    let manifest = RunManifest {
        config_path: Some(args.config.clone()),
        out_dir: resolve_out_dir(args.common.out.as_deref(), &format!("sweep-{}", &hash[..12])),
        seeds: seeds.clone(),
        parallel: args.common.parallel,
        debug_dumps: args.common.debug_dumps,
        overwrite: args.common.overwrite,
        config_hash: hash,
    };

    if args.common.dry_run {
        println!("{} cells x {} seeds", cells.len(), seeds.len());
        for (i, c) in cells.iter().enumerate() {
            println!("{i:>4}  {}", c.label());
        }
        return Ok(Outcome::default());
    }
    manifest.check_targets(&["grid.toml", "results.csv"])?;
    manifest.prepare()?;
    if manifest.debug_dumps {
        log::warn!("--debug-dumps is ignored by sweep; use run on a single cell");
    }

    let grid: Vec<SimConfig> = cells.iter().map(|c| c.config.clone()).collect();
    let rows = with_pool(manifest.parallel, || sweep(&grid, &seeds))?;
    let failed = rows.iter().filter(|r| r.failed()).count();
    for (c, r) in cells.iter().zip(&rows) {
        println!(
            "{}  utility {:.6} +- {:.6}{}",
            c.label(),
            r.mean_utility,
            r.ci95,
            if r.failed() { "  FAILED" } else { "" }
        );
        for e in &r.errors {
            eprintln!("  {}: {e}", c.label());
        }
    }
    let mut out = Outcome {
        failed_cells: failed,
        ..Outcome::default()
    };
    out.written.push(manifest.write("grid.toml", src.as_bytes())?);
    out.written.push(manifest.write_csv("results.csv", &results_csv(&rows)?)?);
    Ok(out)
}

pub fn cmd_plot(args: &PlotArgs) -> Result<Outcome> {
    let rows = read_results_file(&args.results)?;
    let dir = match &args.out {
        Some(d) => d.clone(),
        None => args.results.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    let stem = args
        .results
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("results");
    let written = plot_results(&rows, args.x, &dir, stem, args.overwrite)?;
    for p in &written {
        println!("{}", p.display());
    }
    Ok(Outcome {
        written,
        failed_cells: 0,
    })
}

/// Runs a parsed command line; returns the process exit code.
pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Run(a) => {
            let o = cmd_run(a)?;
            Ok(if o.failed_cells > 0 { 1 } else { 0 })
        }
        Command::Sweep(a) => {
            let o = cmd_sweep(a)?;
            if o.failed_cells > 0 && !a.keep_going {
                eprintln!("{} cell(s) failed", o.failed_cells);
                return Ok(1);
            }
            Ok(0)
        }
        Command::Plot(a) => {
            cmd_plot(a)?;
            Ok(0)
        }
    }
}
