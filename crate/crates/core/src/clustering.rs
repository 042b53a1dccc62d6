//! Demand-based content clustering.
//!
//! Contents are embedded through a Gaussian similarity on popularity-weighted
//! demand, then partitioned by normalized spectral clustering: the cluster
//! count comes from the largest gap in the Laplacian spectrum and the
//! embedding rows are grouped with k-means.
//!
//! Contents whose similarity rows are identical (typical for integer demand
//! counts) collapse into one weighted point. This is exact: for two identical
//! rows `i, j`, `e_i − e_j` is an eigenvector of the normalized Laplacian with
//! eigenvalue 1, and the remaining spectrum is that of a small quotient
//! matrix whose eigenvectors are constant on each group.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::content::DemandVector;
use crate::linalg::symmetric_eigen_lowest;
use crate::{Error, Result, Scalar};

/// Assignment of every content to one of `num_classes` labels `0..K`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClassPartition {
    assignment: Vec<usize>,
    num_classes: usize,
    members: Vec<Vec<usize>>,
}

impl ClassPartition {
    /// Builds a partition from arbitrary labels, renaming them `0..K` in order
    /// of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut rename: HashMap<usize, usize> = HashMap::new();
        let assignment: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = rename.len();
                *rename.entry(*l).or_insert(next)
            })
            .collect();
        let num_classes = rename.len();
        let mut members = vec![Vec::new(); num_classes];
        for (f, &k) in assignment.iter().enumerate() {
            members[k].push(f);
        }
        ClassPartition {
            assignment,
            num_classes,
            members,
        }
    }

    /// Every content in one class.
    pub fn single(num_contents: usize) -> Self {
        Self::from_labels(&vec![0; num_contents])
    }

    /// Every content in its own class.
    pub fn singletons(num_contents: usize) -> Self {
        Self::from_labels(&(0..num_contents).collect::<Vec<_>>())
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_contents(&self) -> usize {
        self.assignment.len()
    }

    #[inline]
    pub fn class_of(&self, f: usize) -> usize {
        self.assignment[f]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn members(&self, class: usize) -> &[usize] {
        &self.members[class]
    }

    pub fn class_size(&self, class: usize) -> usize {
        self.members[class].len()
    }

    /// True when both partitions group contents identically.
    pub fn same_grouping(&self, other: &ClassPartition) -> bool {
        // labels are canonical, so equal groupings have equal assignments
        self.assignment == other.assignment
    }

    /// `content_id,class_label` lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "content_id,class_label")?;
        for (f, k) in self.assignment.iter().enumerate() {
            writeln!(out, "{f},{k}")?;
        }
        Ok(())
    }
}

/// `α·network + (1 − α)·local`, elementwise.
pub fn mix_demand<T: Scalar>(
    local: &DemandVector,
    network: &DemandVector,
    alpha: T,
) -> Result<Vec<T>> {
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(Error::param("alpha", "must be in [0, 1]"));
    }
    if local.counts.len() != network.counts.len() {
        return Err(Error::DimensionMismatch {
            expected: local.counts.len(),
            actual: network.counts.len(),
        });
    }
    Ok(local
        .counts
        .iter()
        .zip(&network.counts)
        .map(|(&l, &g)| alpha * T::of(g as f64) + (T::one() - alpha) * T::of(l as f64))
        .collect())
}

/// Laplace-smoothed popularity `(count + 1) / (total + F)`.
pub fn estimate_popularity<T: Scalar>(demand: &[T]) -> Vec<T> {
    let total: T = demand.iter().copied().sum();
    let denom = total + T::of_usize(demand.len());
    demand.iter().map(|&c| (c + T::one()) / denom).collect()
}

pub fn estimate_popularity_counts<T: Scalar>(demand: &DemandVector) -> Vec<T> {
    let reals: Vec<T> = demand.counts.iter().map(|&c| T::of(c as f64)).collect();
    estimate_popularity(&reals)
}

/// Popularity-weighted demand `w_f = D_f·π_f`.
pub fn weighted_demand<T: Scalar>(demand: &[T], popularity: &[T]) -> Result<Vec<T>> {
    if demand.len() != popularity.len() {
        return Err(Error::DimensionMismatch {
            expected: demand.len(),
            actual: popularity.len(),
        });
    }
    Ok(demand.iter().zip(popularity).map(|(&d, &p)| d * p).collect())
}

/// Median of the nonzero pairwise distances `|w_f − w_f'|`, or 1 when all
/// values coincide.
pub fn median_heuristic_sigma<T: Scalar>(values: &[T]) -> T {
    let groups = group_values(values);
    let mut pairs: Vec<(T, u64)> = Vec::new();
    for (i, (a, na)) in groups.iter().enumerate() {
        for (b, nb) in groups.iter().skip(i + 1) {
            pairs.push(((*a - *b).abs(), (*na * *nb) as u64));
        }
    }
    if pairs.is_empty() {
        return T::one();
    }
    pairs.sort_unstable_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    let total: u64 = pairs.iter().map(|p| p.1).sum();
    let half = total.div_ceil(2);
    let mut acc = 0;
    for (gap, w) in pairs {
        acc += w;
        if acc >= half {
            return gap;
        }
    }
    unreachable!("weights sum to total")
}

/// Distinct values with their multiplicities, in order of first appearance.
fn group_values<T: Scalar>(values: &[T]) -> Vec<(T, usize)> {
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut out: Vec<(T, usize)> = Vec::new();
    for &v in values {
        let key = v.to_f64_lossy().to_bits();
        match index.get(&key) {
            Some(&g) => out[g].1 += 1,
            None => {
                index.insert(key, out.len());
                out.push((v, 1));
            }
        }
    }
    out
}

/// Gaussian similarity matrix, `F × F`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<T> {
    n: usize,
    entries: Vec<T>,
    pub sigma_l: T,
}

impl<T: Scalar> SimilarityMatrix<T> {
    /// Wraps explicit entries. The matrix must be square; symmetry and
    /// positivity are the caller's responsibility.
    pub fn from_rows(rows: &[Vec<T>], sigma_l: T) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: bad.len(),
            });
        }
        Ok(SimilarityMatrix {
            n,
            entries: rows.iter().flatten().copied().collect(),
            sigma_l,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Entry `(f, f')` is `exp(−(w_f − w_f')² / (2σ²))` with `w = D·π`.
pub fn build_similarity<T: Scalar>(
    weighted_demand: &[T],
    popularity_estimate: &[T],
    sigma_l: T,
) -> Result<SimilarityMatrix<T>> {
    if !(sigma_l > T::zero()) {
        return Err(Error::param("sigma_l", "must be positive"));
    }
    let w = self::weighted_demand(weighted_demand, popularity_estimate)?;
    let n = w.len();
    let mut entries = vec![T::one(); n * n];
    for i in 0..n {
        for j in 0..i {
            let k = gaussian_kernel(w[i], w[j], sigma_l);
            entries[i * n + j] = k;
            entries[j * n + i] = k;
        }
    }
    Ok(SimilarityMatrix {
        n,
        entries,
        sigma_l,
    })
}

#[inline]
fn gaussian_kernel<T: Scalar>(a: T, b: T, sigma: T) -> T {
    let diff = a - b;
    (-(diff * diff) / (T::of(2.0) * sigma * sigma)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub k_min: usize,
    pub k_max: usize,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            k_min: 2,
            k_max: 20,
            kmeans_restarts: 50,
            kmeans_max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOutcome<T> {
    pub partition: ClassPartition,
    /// Full spectrum of the normalized Laplacian, ascending.
    pub eigenvalues: Vec<T>,
    /// Cluster count picked by the eigengap rule, before any empty-class
    /// repair.
    pub eigengap_k: usize,
}

/// Collapsed view of a similarity matrix over groups of identical rows.
struct Quotient<T> {
    members: Vec<Vec<usize>>,
    /// Similarity between group representatives.
    kernel: Vec<Vec<T>>,
    /// Row sums of the full matrix, per group.
    degree: Vec<T>,
    n: usize,
}

/// Normalized spectral clustering of `m` with eigengap model selection.
pub fn spectral_cluster<T: Scalar, R: Rng + ?Sized>(
    m: &SimilarityMatrix<T>,
    params: &ClusterParams,
    rng: &mut R,
) -> Result<SpectralOutcome<T>> {
    check_params(params, m.dim())?;
    let n = m.dim();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let key: Vec<u64> = m.row(i).iter().map(|x| x.to_f64_lossy().to_bits()).collect();
        let next = members.len();
        let g = *index.entry(key).or_insert(next);
        if g == members.len() {
            members.push(Vec::new());
        }
        members[g].push(i);
    }
    let reps: Vec<usize> = members.iter().map(|g| g[0]).collect();
    let kernel = reps
        .iter()
        .map(|&a| reps.iter().map(|&b| m.get(a, b)).collect())
        .collect();
    let degree = reps.iter().map(|&a| m.row(a).iter().copied().sum()).collect();
    let q = Quotient {
        members,
        kernel,
        degree,
        n,
    };
    cluster_quotient(q, params, rng, || {
        (0..n).map(|i| m.row(i).to_vec()).collect::<Vec<_>>()
    })
}

/// Same result as [`build_similarity`] followed by [`spectral_cluster`]
/// without materializing the `F × F` matrix unless the reduced problem is
/// degenerate.
pub fn cluster_weighted_demand<T: Scalar, R: Rng + ?Sized>(
    demand: &[T],
    popularity: &[T],
    sigma_l: T,
    params: &ClusterParams,
    rng: &mut R,
) -> Result<SpectralOutcome<T>> {
    if !(sigma_l > T::zero()) {
        return Err(Error::param("sigma_l", "must be positive"));
    }
    let w = weighted_demand(demand, popularity)?;
    let n = w.len();
    check_params(params, n)?;
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut values: Vec<T> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (f, &v) in w.iter().enumerate() {
        let next = members.len();
        let g = *index.entry(v.to_f64_lossy().to_bits()).or_insert(next);
        if g == members.len() {
            members.push(Vec::new());
            values.push(v);
        }
        members[g].push(f);
    }
    let kernel: Vec<Vec<T>> = values
        .iter()
        .map(|&a| values.iter().map(|&b| gaussian_kernel(a, b, sigma_l)).collect())
        .collect();
    let degree = kernel
        .iter()
        .map(|row| {
            row.iter()
                .zip(&members)
                .map(|(&k, g)| k * T::of_usize(g.len()))
                .sum()
        })
        .collect();
    let q = Quotient {
        members,
        kernel,
        degree,
        n,
    };
    cluster_quotient(q, params, rng, || {
        (0..n)
            .map(|i| (0..n).map(|j| gaussian_kernel(w[i], w[j], sigma_l)).collect())
            .collect()
    })
}

fn check_params(params: &ClusterParams, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("similarity", "empty matrix"));
    }
    if params.k_min < 1 || params.k_min > params.k_max || params.k_max > n {
        return Err(Error::param(
            "k_min/k_max",
            format!("need 1 <= k_min <= k_max <= {n}"),
        ));
    }
    if params.kmeans_restarts == 0 || params.kmeans_max_iter == 0 {
        return Err(Error::param("kmeans", "restarts and iterations must be positive"));
    }
    Ok(())
}

/// Smallest `i` in `[k_min, k_max]` maximizing `λ_{i+1} − λ_i` (1-based).
pub fn eigengap_k<T: Scalar>(sorted: &[T], k_min: usize, k_max: usize) -> usize {
    let n = sorted.len();
    let hi = k_max.min(n.saturating_sub(1));
    let mut best_k = k_min.min(n.max(1));
    let mut best_gap = T::neg_infinity();
    for i in k_min..=hi {
        let gap = sorted[i] - sorted[i - 1];
        if gap > best_gap {
            best_gap = gap;
            best_k = i;
        }
    }
    best_k
}

fn cluster_quotient<T: Scalar, R: Rng + ?Sized, F>(
    q: Quotient<T>,
    params: &ClusterParams,
    rng: &mut R,
    full_matrix: F,
) -> Result<SpectralOutcome<T>>
where
    F: FnOnce() -> Vec<Vec<T>>,
{
    let g_count = q.members.len();
    let sizes: Vec<T> = q.members.iter().map(|g| T::of_usize(g.len())).collect();
    let inv_sqrt_deg: Vec<T> = q.degree.iter().map(|d| T::one() / d.sqrt()).collect();
    let reduced: Vec<Vec<T>> = (0..g_count)
        .map(|a| {
            (0..g_count)
                .map(|b| {
                    let off = (sizes[a] * sizes[b]).sqrt()
                        * q.kernel[a][b]
                        * inv_sqrt_deg[a]
                        * inv_sqrt_deg[b];
                    if a == b {
                        T::one() - off
                    } else {
                        -off
                    }
                })
                .collect()
        })
        .collect();
    let eig = symmetric_eigen_lowest(&reduced, params.k_max.min(g_count))?;

    let mut spectrum = eig.values.clone();
    spectrum.extend(std::iter::repeat_n(T::one(), q.n - g_count));
    spectrum.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let k = eigengap_k(&spectrum, params.k_min, params.k_max);

    let quotient_ok = g_count == q.n || (k <= g_count && eig.values[k - 1] < T::one() - T::of(1e-9));
    let (points, weights, owners): (Vec<Vec<T>>, Vec<T>, Vec<Vec<usize>>) = if quotient_ok {
        let points = (0..g_count)
            .map(|g| normalize_row((0..k).map(|j| eig.component(g, j)).collect()))
            .collect();
        (points, sizes, q.members)
    } else {
        log::debug!("degenerate quotient spectrum, falling back to the full {}x{} problem", q.n, q.n);
        let m = full_matrix();
        let n = q.n;
        let deg: Vec<T> = m.iter().map(|row| row.iter().copied().sum()).collect();
        let lap: Vec<Vec<T>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let off = m[i][j] / (deg[i] * deg[j]).sqrt();
                        if i == j {
                            T::one() - off
                        } else {
                            -off
                        }
                    })
                    .collect()
            })
            .collect();
        let full = symmetric_eigen_lowest(&lap, k)?;
        let points = (0..n)
            .map(|i| normalize_row((0..k).map(|j| full.component(i, j)).collect()))
            .collect();
        (points, vec![T::one(); n], (0..n).map(|i| vec![i]).collect())
    };

    let mut target = k;
    let point_labels = loop {
        match weighted_kmeans(&points, &weights, target, params, rng) {
            Some(labels) => break labels,
            None if target > 1 => {
                log::debug!("k-means left an empty class at K = {target}; retrying with K = {}", target - 1);
                target -= 1;
            }
            None => unreachable!("one cluster is never empty"),
        }
    };
    let mut labels = vec![0; q.n];
    for (p, owned) in owners.iter().enumerate() {
        for &f in owned {
            labels[f] = point_labels[p];
        }
    }
    Ok(SpectralOutcome {
        partition: ClassPartition::from_labels(&labels),
        eigenvalues: spectrum,
        eigengap_k: k,
    })
}

fn normalize_row<T: Scalar>(mut row: Vec<T>) -> Vec<T> {
    let norm = row.iter().map(|x| *x * *x).sum::<T>().sqrt();
    if norm > T::zero() {
        row.iter_mut().for_each(|x| *x = *x / norm);
    }
    row
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum()
}

/// Weighted k-means with k-means++ seeding and restarts. Returns `None` when
/// a run cannot produce `k` non-empty clusters.
fn weighted_kmeans<T: Scalar, R: Rng + ?Sized>(
    points: &[Vec<T>],
    weights: &[T],
    k: usize,
    params: &ClusterParams,
    rng: &mut R,
) -> Option<Vec<usize>> {
    let n = points.len();
    if k == 1 {
        return Some(vec![0; n]);
    }
    if k > n {
        return None;
    }
    let mut best: Option<(T, Vec<usize>)> = None;
    for _ in 0..params.kmeans_restarts {
        let Some(centers) = kmeans_pp(points, weights, k, rng) else {
            continue;
        };
        let Some((inertia, labels)) = lloyd(points, weights, centers, params.kmeans_max_iter) else {
            continue;
        };
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    best.map(|(_, labels)| labels)
}

fn sample_weighted<T: Scalar, R: Rng + ?Sized>(weights: &[T], rng: &mut R) -> Option<usize> {
    let total: T = weights.iter().copied().sum();
    if !(total > T::zero()) {
        return None;
    }
    let mut target = T::of(rng.random::<f64>()) * total;
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return Some(i);
        }
        target = target - w;
    }
    weights.iter().rposition(|w| *w > T::zero())
}

fn kmeans_pp<T: Scalar, R: Rng + ?Sized>(
    points: &[Vec<T>],
    weights: &[T],
    k: usize,
    rng: &mut R,
) -> Option<Vec<Vec<T>>> {
    let first = sample_weighted(weights, rng)?;
    let mut centers = vec![points[first].clone()];
    let mut nearest: Vec<T> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let scores: Vec<T> = nearest.iter().zip(weights).map(|(d, w)| *d * *w).collect();
        // all remaining mass sits on existing centers
        let next = sample_weighted(&scores, rng)?;
        centers.push(points[next].clone());
        let c = centers.last().expect("just pushed");
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, c));
        }
    }
    Some(centers)
}

fn lloyd<T: Scalar>(
    points: &[Vec<T>],
    weights: &[T],
    mut centers: Vec<Vec<T>>,
    max_iter: usize,
) -> Option<(T, Vec<usize>)> {
    let k = centers.len();
    let dim = points.first().map_or(0, Vec::len);
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..max_iter {
        let mut changed = false;
        for (p, label) in points.iter().zip(labels.iter_mut()) {
            let mut best = 0;
            let mut best_d = T::infinity();
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if *label != best {
                *label = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut mass = vec![T::zero(); k];
        for ((p, &l), &w) in points.iter().zip(&labels).zip(weights) {
            mass[l] = mass[l] + w;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s = *s + w * *x;
            }
        }
        if mass.iter().any(|m| !(*m > T::zero())) {
            return None;
        }
        for ((center, sum), m) in centers.iter_mut().zip(sums).zip(&mass) {
            *center = sum.into_iter().map(|s| s / *m).collect();
        }
        if !changed {
            break;
        }
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .zip(weights)
        .map(|((p, &l), &w)| w * sq_dist(p, &centers[l]))
        .sum();
    Some((inertia, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dv(counts: &[u64]) -> DemandVector {
        DemandVector {
            counts: counts.to_vec(),
            window_slots: 1,
        }
    }

    #[test]
    fn mix_endpoints_and_midpoint() {
        let local = dv(&[2, 0]);
        let net = dv(&[4, 2]);
        assert_eq!(mix_demand(&local, &net, 0.0f64).unwrap(), vec![2.0, 0.0]);
        assert_eq!(mix_demand(&local, &net, 1.0f64).unwrap(), vec![4.0, 2.0]);
        assert_eq!(mix_demand(&local, &net, 0.5f64).unwrap(), vec![3.0, 1.0]);
        assert!(mix_demand(&local, &net, 1.5f64).is_err());
        assert!(mix_demand(&local, &dv(&[1]), 0.5f64).is_err());
    }

    #[test]
    fn popularity_smoothing() {
        let p = estimate_popularity_counts::<f64>(&dv(&[0, 0, 0, 0]));
        assert!(p.iter().all(|x| (x - 0.25).abs() < 1e-15));
        let p = estimate_popularity_counts::<f64>(&dv(&[3, 1]));
        assert!((p[0] - 4.0 / 6.0).abs() < 1e-15 && (p[1] - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_values() {
        let sigma = 2.0f64;
        let ones = vec![1.0; 3];
        let w = [0.0, 0.0, sigma * 2f64.sqrt()];
        let m = build_similarity(&w, &ones, sigma).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
        assert!((m.get(0, 2) - (-1.0f64).exp()).abs() < 1e-12);
        assert!(m.is_symmetric());
        assert!(build_similarity(&w, &ones, 0.0).is_err());
    }

    #[test]
    fn median_heuristic_ignores_zero_gaps() {
        // gaps: 1 (x4 pairs), 2 (x2 pairs)
        let s = median_heuristic_sigma(&[0.0f64, 0.0, 1.0, 1.0, 2.0]);
        assert_eq!(s, 1.0);
        assert_eq!(median_heuristic_sigma(&[3.0f64; 4]), 1.0);
    }

    #[test]
    fn all_equal_demand_is_one_cluster() {
        let m = build_similarity(&[5.0f64; 6], &[1.0; 6], 1.0).unwrap();
        let params = ClusterParams {
            k_min: 1,
            k_max: 5,
            ..Default::default()
        };
        let out = spectral_cluster(&m, &params, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out.eigengap_k, 1);
        assert_eq!(out.partition.num_classes(), 1);
        assert!(out.eigenvalues[0].abs() < 1e-12);
        for v in &out.eigenvalues[1..] {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigengap_prefers_smallest_on_ties() {
        assert_eq!(eigengap_k(&[0.0, 1.0, 2.0, 3.0], 1, 3), 1);
        assert_eq!(eigengap_k(&[0.0, 0.0, 1.0, 1.0], 1, 3), 2);
        assert_eq!(eigengap_k(&[0.0], 1, 1), 1);
    }

    #[test]
    fn partition_labels_are_canonical() {
        let p = ClassPartition::from_labels(&[7, 7, 3, 9, 3]);
        assert_eq!(p.assignment(), &[0, 0, 1, 2, 1]);
        assert_eq!(p.members(1), &[2, 4]);
        assert_eq!(ClassPartition::singletons(3).num_classes(), 3);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("content_id,class_label\n0,0\n"));
    }

    #[test]
    fn fast_path_matches_matrix_path() {
        let demand: Vec<f64> = [0, 0, 1, 1, 1, 6, 7, 6, 12, 13, 0, 2]
            .iter()
            .map(|&c| c as f64)
            .collect();
        let pop = estimate_popularity(&demand);
        let w = weighted_demand(&demand, &pop).unwrap();
        let sigma = median_heuristic_sigma(&w);
        let params = ClusterParams {
            k_min: 1,
            k_max: 6,
            ..Default::default()
        };
        let m = build_similarity(&demand, &pop, sigma).unwrap();
        let a = spectral_cluster(&m, &params, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = cluster_weighted_demand(&demand, &pop, sigma, &params, &mut ChaCha8Rng::seed_from_u64(11))
            .unwrap();
        assert_eq!(a.partition, b.partition);
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_cluster_bounds() {
        let m = build_similarity(&[1.0f64, 2.0], &[1.0, 1.0], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = ClusterParams {
            k_min: 2,
            k_max: 3,
            ..Default::default()
        };
        assert!(spectral_cluster(&m, &bad, &mut rng).is_err());
    }
}
