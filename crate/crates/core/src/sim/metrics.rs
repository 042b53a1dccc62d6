use serde::{Deserialize, Serialize};

use super::config::Scheme;

/// Network totals for one cache-update epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: u64,
    /// `ε_s × Σ μ·reward` for each SBS.
    pub utility: Vec<f64>,
    /// `ε_s` in force during the epoch, per SBS.
    pub epsilon: Vec<f64>,
    pub requests: u64,
    pub hits: u64,
}

impl EpochMetrics {
    pub fn hit_rate(&self) -> f64 {
        if self.requests == 0 {
            0.0
        } else {
            self.hits as f64 / self.requests as f64
        }
    }

    pub fn miss_rate(&self) -> f64 {
        if self.requests == 0 {
            0.0
        } else {
            (self.requests - self.hits) as f64 / self.requests as f64
        }
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub scheme: Scheme,
    pub seed: u64,
    pub num_sbs: usize,
    pub num_ues: usize,
    /// Time-averaged utility of each SBS (total over the run / slots).
    pub per_sbs_utility: Vec<f64>,
    /// Mean of `per_sbs_utility`.
    pub mean_utility: f64,
    pub requests: u64,
    pub hits: u64,
    pub hit_rate: f64,
    /// Set when the run saw no request; `hit_rate` is then reported as 0.
    pub no_requests: bool,
    /// Mean over epochs and SBSs of `ε_s`.
    pub mean_epsilon: f64,
    pub infeasible_updates: u64,
    /// Slots (1-based) after which re-clustering ran.
    pub clustering_slots: Vec<u64>,
    /// Slots (1-based) after which caches were updated.
    pub update_slots: Vec<u64>,
    pub epochs: Vec<EpochMetrics>,
    /// SHA-256 of the request trace.
    pub trace_digest: String,
}

/// Mean and 95% confidence half-width of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub ci95: f64,
}

// two-sided 97.5% Student-t quantiles, df = 1..=30
const T975: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
    2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
    2.052, 2.048, 2.045, 2.042,
];

fn t_quantile(df: usize) -> f64 {
    match df {
        0 => f64::INFINITY,
        1..=30 => T975[df - 1],
        _ => 1.96,
    }
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary {
            n,
            mean: f64::NAN,
            ci95: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Summary { n, mean, ci95: 0.0 };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Summary {
        n,
        mean,
        ci95: t_quantile(n - 1) * (var / n as f64).sqrt(),
    }
}
