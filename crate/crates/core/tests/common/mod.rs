//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues ascending and the matching eigenvectors as columns.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&c| v[r][c]).collect()).collect();
    (values, vectors)
}

/// `I − D^(−1/2) W D^(−1/2)`.
pub fn normalized_laplacian(w: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = w.len();
    let d: Vec<f64> = w.iter().map(|r| r.iter().sum::<f64>()).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    id - w[i][j] / (d[i] * d[j]).sqrt()
                })
                .collect()
        })
        .collect()
}

/// Planted partition: labels and a symmetric similarity matrix with strong
/// within-block and weak cross-block entries, rows in shuffled order.
pub fn planted_similarity<R: Rng>(block_sizes: &[usize], rng: &mut R) -> (Vec<usize>, Vec<Vec<f64>>) {
    let mut labels: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(k, &n)| std::iter::repeat_n(k, n))
        .collect();
    labels.shuffle(rng);
    let n = labels.len();
    let mut w = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let x = if labels[i] == labels[j] {
                rng.random_range(0.8..1.0)
            } else {
                rng.random_range(0.0..0.05)
            };
            w[i][j] = x;
            w[j][i] = x;
        }
    }
    (labels, w)
}

/// Oracle spectral clustering: Jacobi spectrum of the normalized Laplacian,
/// largest-gap `K` in `[k_min, k_max]`, then greedy grouping of the
/// row-normalized embedding by distance to a group representative.
pub fn oracle_spectral(w: &[Vec<f64>], k_min: usize, k_max: usize) -> (usize, Vec<usize>) {
    let n = w.len();
    let (values, vectors) = jacobi_eigen(&normalized_laplacian(w));
    let mut k = k_min;
    let mut best = f64::NEG_INFINITY;
    for i in k_min..=k_max.min(n - 1) {
        let gap = values[i] - values[i - 1];
        if gap > best {
            best = gap;
            k = i;
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let r: Vec<f64> = (0..k).map(|j| vectors[i][j]).collect();
            let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            r.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let mut reps: Vec<usize> = Vec::new();
    let mut labels = vec![0; n];
    for i in 0..n {
        let found = reps.iter().position(|&r| {
            rows[i]
                .iter()
                .zip(&rows[r])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                < 0.5
        });
        labels[i] = match found {
            Some(g) => g,
            None => {
                reps.push(i);
                reps.len() - 1
            }
        };
    }
    (k, labels)
}

/// Same grouping up to label renaming.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// The three scalar recursions for two actions, written out directly.
pub struct ScalarOracle {
    pub u: [f64; 2],
    pub r: [f64; 2],
    pub p: [f64; 2],
    pub t: u64,
}

impl ScalarOracle {
    pub fn new() -> Self {
        ScalarOracle {
            u: [0.0; 2],
            r: [0.0; 2],
            p: [0.5; 2],
            t: 1,
        }
    }

    pub fn step(&mut self, a: usize, obs: f64, xi: f64, e: [f64; 3]) {
        let t = self.t as f64;
        let (g1, g2, g3) = (t.powf(-e[0]), t.powf(-e[1]), t.powf(-e[2]));
        self.u[a] += g1 * (obs - self.u[a]);
        for b in 0..2 {
            self.r[b] += g2 * (self.u[b] - obs - self.r[b]);
        }
        let z0 = (self.r[0].max(0.0) / xi).exp();
        let z1 = (self.r[1].max(0.0) / xi).exp();
        let g = [z0 / (z0 + z1), z1 / (z0 + z1)];
        for b in 0..2 {
            self.p[b] += g3 * (g[b] - self.p[b]);
        }
        let s = self.p[0] + self.p[1];
        self.p = [self.p[0] / s, self.p[1] / s];
        self.t += 1;
    }
}
