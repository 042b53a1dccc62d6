//! Acceptance checks, one PASS/FAIL line per criterion. Exits nonzero if
//! any criterion fails.

mod common;

use std::collections::HashMap;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use edgecache::caching::{cache_update, update_cost, CacheState, FronthaulModel};
use edgecache::clustering::{spectral_cluster, ClassPartition, ClusterParams, SimilarityMatrix};
use edgecache::learning::{learner_step, sample_action, LearnerState, LearningSchedule};
use edgecache::sim::{run_replication, summarize, with_scheme, MetricsRecord, Scheme, SimConfig, Summary};
use edgecache::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Memoized replications keyed by the serialized config and seed.
#[derive(Default)]
struct Runs {
    cache: HashMap<(String, u64), MetricsRecord>,
}

impl Runs {
    fn get(&mut self, cfg: &SimConfig, seed: u64) -> &MetricsRecord {
        let key = (serde_json::to_string(cfg).unwrap(), seed);
        self.cache
            .entry(key)
            .or_insert_with(|| run_replication(cfg, seed).unwrap_or_else(|e| panic!("seed {seed}: {e}")))
    }

    fn utilities(&mut self, cfg: &SimConfig, scheme: Scheme, seeds: &[u64]) -> Vec<f64> {
        let cfg = with_scheme(cfg, scheme);
        seeds.iter().map(|&s| self.get(&cfg, s).mean_utility).collect()
    }
}

fn paired(a: &[f64], b: &[f64]) -> Summary {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    summarize(&d)
}

fn dense() -> SimConfig {
    SimConfig::default()
}

fn sparse() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.network.lambda_sbs = cfg.network.lambda_ue / 10.0;
    cfg
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fmt(s: &Summary) -> String {
    format!("{:.5}±{:.5}", s.mean, s.ci95)
}

fn ordering(runs: &mut Runs) -> Outcome {
    let seeds = dense().sim.seeds;
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, cfg) in [("sparse", sparse()), ("dense", dense())] {
        let p = runs.utilities(&cfg, Scheme::Proposed, &seeds);
        for base in [Scheme::B1, Scheme::B2] {
            let b = runs.utilities(&cfg, base, &seeds);
            let gap = paired(&p, &b);
            let ok = gap.mean > gap.ci95;
            pass &= ok;
            parts.push(format!(
                "{name}: proposed {} vs {base} {} gap {}{}",
                fmt(&summarize(&p)),
                fmt(&summarize(&b)),
                fmt(&gap),
                if ok { "" } else { " (not met)" }
            ));
        }
    }
    outcome(pass, parts.join("; "))
}

fn clustering_ablation(runs: &mut Runs) -> Outcome {
    let mut cfg = dense();
    cfg.content.num_contents = 200;
    let seeds = cfg.sim.seeds.clone();
    let p = runs.utilities(&cfg, Scheme::Proposed, &seeds);
    let n = runs.utilities(&cfg, Scheme::ProposedNoClustering, &seeds);
    let gap = paired(&p, &n);
    outcome(
        gap.mean + gap.ci95 >= 0.0,
        format!(
            "F=200: clustering {} vs no clustering {} gap {}",
            fmt(&summarize(&p)),
            fmt(&summarize(&n)),
            fmt(&gap)
        ),
    )
}

fn cache_size_trend(runs: &mut Runs) -> Outcome {
    let seeds: Vec<u64> = (1..=10).collect();
    let sizes = [10, 25, 50, 100];
    let mut pass = true;
    let mut parts = Vec::new();
    for scheme in Scheme::ALL {
        let curve: Vec<Summary> = sizes
            .iter()
            .map(|&d| {
                let mut cfg = dense();
                cfg.caching.capacity = d;
                summarize(&runs.utilities(&cfg, scheme, &seeds))
            })
            .collect();
        let ok = curve
            .windows(2)
            .all(|w| w[1].mean >= w[0].mean || w[0].mean - w[0].ci95 <= w[1].mean + w[1].ci95);
        pass &= ok;
        let pts: Vec<String> = curve.iter().map(|s| format!("{:.4}", s.mean)).collect();
        parts.push(format!("{scheme} [{}]{}", pts.join(" "), if ok { "" } else { " (decreasing)" }));
    }
    outcome(pass, format!("d=10,25,50,100: {}", parts.join("; ")))
}

/// First `β ≥ 0.5` where the clustering and no-clustering curves meet
/// (difference within its interval) or change sign, linearly interpolated.
fn crossing(betas: &[f64], diff: &[Summary]) -> Option<f64> {
    for i in 0..betas.len() {
        if betas[i] >= 0.5 && diff[i].mean.abs() <= diff[i].ci95 {
            return Some(betas[i]);
        }
        if i + 1 < betas.len() && diff[i].mean.signum() != diff[i + 1].mean.signum() {
            let (a, b) = (diff[i].mean, diff[i + 1].mean);
            let x = betas[i] + (betas[i + 1] - betas[i]) * a / (a - b);
            if x >= 0.5 {
                return Some(x);
            }
        }
    }
    None
}

fn beta_tradeoff(runs: &mut Runs) -> Outcome {
    let seeds: Vec<u64> = (1..=10).collect();
    let betas: Vec<f64> = (0..=5).map(|i| i as f64 * 0.2).collect();
    let base = dense();
    let mut parts = Vec::new();
    let mut pass = true;
    let mut crossings = Vec::new();
    let mut utilities = Vec::new();
    for (label, c_f) in [("C_f", base.caching.fronthaul_capacity), ("C_f/2", base.caching.fronthaul_capacity / 2.0)] {
        let mut prop = Vec::new();
        let mut diff = Vec::new();
        for &beta in &betas {
            let mut cfg = base.clone();
            cfg.caching.beta = beta;
            cfg.caching.fronthaul_capacity = c_f;
            let p = runs.utilities(&cfg, Scheme::Proposed, &seeds);
            let n = runs.utilities(&cfg, Scheme::ProposedNoClustering, &seeds);
            diff.push(paired(&p, &n));
            prop.push(p);
        }
        let means: Vec<f64> = prop.iter().map(|p| summarize(p).mean).collect();
        let hi = (0..means.len()).max_by(|&a, &b| means[a].total_cmp(&means[b])).unwrap();
        let lo = (0..means.len()).min_by(|&a, &b| means[a].total_cmp(&means[b])).unwrap();
        let spread = paired(&prop[hi], &prop[lo]);
        let varies = spread.mean > spread.ci95;
        let cross = crossing(&betas, &diff);
        pass &= varies && cross.is_some();
        let pts: Vec<String> = means.iter().map(|m| format!("{m:.4}")).collect();
        let gaps: Vec<String> = diff.iter().map(|d| format!("{:+.4}", d.mean)).collect();
        parts.push(format!(
            "{label}: proposed [{}] gap vs no clustering [{}] spread {}{} crossing {}",
            pts.join(" "),
            gaps.join(" "),
            fmt(&spread),
            if varies { "" } else { " (flat)" },
            cross.map_or("none".to_string(), |x| format!("{x:.2}"))
        ));
        crossings.push(cross);
        utilities.push(prop);
    }
    let changed = utilities[0] != utilities[1];
    let shift = match (crossings[0], crossings[1]) {
        (Some(a), Some(b)) => Some((a - b).abs()),
        _ => None,
    };
    let stable = shift.is_some_and(|s| s < 0.2);
    pass &= changed && stable;
    parts.push(format!(
        "halving changes utility: {changed}; crossing shift {}",
        shift.map_or("n/a".to_string(), |s| format!("{s:.2}"))
    ));
    outcome(pass, parts.join("; "))
}

fn spectral_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut matched = 0;
    let total = 50;
    for i in 0..total {
        let k = 2 + i % 2;
        let mut blocks = vec![2; k];
        let spare = 12 - 2 * k;
        for _ in 0..rng.random_range(0..=spare) {
            let b = rng.random_range(0..k);
            blocks[b] += 1;
        }
        let (planted, w) = common::planted_similarity(&blocks, &mut rng);
        let params = ClusterParams {
            k_min: 1,
            k_max: w.len().min(6),
            ..ClusterParams::default()
        };
        let (ok, ol) = common::oracle_spectral(&w, params.k_min, params.k_max);
        let m = SimilarityMatrix::from_rows(&w, 1.0).unwrap();
        let out = spectral_cluster(&m, &params, &mut rng).unwrap();
        if out.eigengap_k == k
            && ok == k
            && common::same_partition(out.partition.assignment(), &planted)
            && common::same_partition(&ol, &planted)
        {
            matched += 1;
        }
    }
    outcome(matched == total, format!("{matched}/{total} planted 2- and 3-block instances recovered"))
}

fn learner_suite() -> Outcome {
    let sched = LearningSchedule::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    let mut steps = 0;
    while steps < 1_000_000 {
        let n = rng.random_range(2..=6);
        let xi = 10f64.powf(rng.random_range(-3.0..1.0));
        let mut s = LearnerState::new(n, xi).unwrap();
        for _ in 0..1000 {
            let a = rng.random_range(0..n);
            let u = rng.random_range(-10.0..10.0);
            s = learner_step(&s, a, u, &sched).unwrap();
            let sum: f64 = s.policy.iter().sum();
            let neg = s.policy.iter().fold(0.0f64, |m, &p| m.max(-p));
            worst = worst.max((sum - 1.0).abs()).max(neg);
            steps += 1;
        }
    }

    let payoff = [1.0, 0.5];
    let xi = dense().learning.xi_s;
    let mut converged = 0;
    let mut oracle_dev: f64 = 0.0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = LearnerState::new(2, xi).unwrap();
        let mut oracle = common::ScalarOracle::new();
        for _ in 0..100_000 {
            let a = sample_action(&s, &mut rng).unwrap();
            s = learner_step(&s, a, payoff[a], &sched).unwrap();
            oracle.step(a, payoff[a], xi, sched.exponents);
        }
        oracle_dev = oracle_dev.max((s.policy[0] - oracle.p[0]).abs());
        if s.policy[0] > 0.9 {
            converged += 1;
        }
    }
    outcome(
        worst < 1e-9 && converged >= 95 && oracle_dev < 1e-9,
        format!(
            "{steps} fuzz steps, max simplex deviation {worst:.1e}; bandit pi(best) > 0.9 in {converged}/100 seeds, oracle deviation {oracle_dev:.1e}"
        ),
    )
}

fn cost_model() -> Outcome {
    let mut failures = Vec::new();
    let fh = FronthaulModel::equal_split(1e9, 1, 1.0, 10, 1e9, 1.0).unwrap();
    let none = update_cost(0, &fh).unwrap();
    if none.epsilon != 1.0 || none.tau_slots != 0.0 {
        failures.push(format!("N=0 gave {none:?}"));
    }
    let two = update_cost(2, &fh).unwrap();
    if two.tau_slots != 2.0 || two.epsilon != 0.8 {
        failures.push(format!("N=2 gave {two:?}"));
    }
    if !matches!(update_cost(10, &fh), Err(Error::InfeasibleUpdate { .. })) {
        failures.push("tau = T2 accepted".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    let mut infeasible = 0;
    for _ in 0..2000 {
        let f = rng.random_range(10..60);
        let d = rng.random_range(1..=f / 2);
        let t2 = rng.random_range(1..100);
        let fh = FronthaulModel::equal_split(
            10f64.powf(rng.random_range(6.0..10.0)),
            rng.random_range(1..50),
            rng.random_range(0.1..4.0),
            t2,
            1e7,
            1.0,
        )
        .unwrap();
        let labels: Vec<usize> = (0..f).map(|i| i % 4).collect();
        let part = ClassPartition::from_labels(&labels);
        let mut cache = CacheState::<f64>::new(d, f);
        for i in 0..d {
            cache.insert(i, rng.random_range(0.0..3.0));
        }
        let evict = rng.random_range(0..=d);
        let tau = fh.overhead_const * evict as f64 * fh.content_size_bits / fh.per_sbs_capacity;
        match cache_update(&cache, &[0.25; 4], &part, evict, &fh, &mut rng) {
            Ok(u) => {
                if !(u.cost.epsilon > 0.0 && u.cost.epsilon <= 1.0) {
                    failures.push(format!("epsilon {} out of range", u.cost.epsilon));
                }
                checked += 1;
            }
            Err(Error::InfeasibleUpdate { .. }) => infeasible += 1,
            Err(e) => failures.push(format!("unexpected error {e}")),
        }
        if tau >= t2 as f64 && update_cost(evict, &fh).is_ok() {
            failures.push(format!("tau {tau} >= T2 {t2} accepted"));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "N=2, 1 Gbit, 1 Gbps, T2=10 gives tau=2, eps=0.8; {checked} fuzzed updates in (0,1], {infeasible} rejected as infeasible{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn determinism() -> Outcome {
    let base = dense();
    let mut pass = true;
    let mut parts = Vec::new();
    for seed in [1, 2] {
        let mut digests = Vec::new();
        for scheme in Scheme::ALL {
            let cfg = with_scheme(&base, scheme);
            let a = run_replication(&cfg, seed).unwrap();
            let b = run_replication(&cfg, seed).unwrap();
            let same = a == b && a.mean_utility.to_bits() == b.mean_utility.to_bits();
            pass &= same;
            if !same {
                parts.push(format!("{scheme} seed {seed} not reproducible"));
            }
            digests.push(a.trace_digest);
        }
        let shared = digests.windows(2).all(|w| w[0] == w[1]);
        pass &= shared;
        parts.push(format!(
            "seed {seed}: trace {}{}",
            &digests[0][..16],
            if shared { " shared by all schemes" } else { " differs across schemes" }
        ));
    }
    outcome(pass, format!("records bit-identical on rerun; {}", parts.join("; ")))
}

fn main() {
    let mut runs = Runs::default();
    let criteria: [(&str, Box<dyn FnOnce(&mut Runs) -> Outcome>); 8] = [
        ("ordering vs baselines", Box::new(ordering)),
        ("clustering ablation", Box::new(clustering_ablation)),
        ("cache-size trend", Box::new(cache_size_trend)),
        ("beta tradeoff", Box::new(beta_tradeoff)),
        ("spectral oracle", Box::new(|_| spectral_oracle())),
        ("learner suite", Box::new(|_| learner_suite())),
        ("cost model", Box::new(|_| cost_model())),
        ("determinism and common random numbers", Box::new(|_| determinism())),
    ];
    // Numeric arguments pick a subset of criteria; anything else is ignored.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let o = panic::catch_unwind(AssertUnwindSafe(|| check(&mut runs))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} {}: {} ({:.0}s) {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
