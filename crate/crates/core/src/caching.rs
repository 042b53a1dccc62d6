//! Per-SBS cache contents, eviction/insertion policies and fronthaul cost.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::ClassPartition;
use crate::learning::{sample_from, SIMPLEX_TOL};
use crate::scalar::{check_simplex, softmax};
use crate::{Error, Result, Scalar};

/// Contents stored at one SBS with their cumulative policy-mass tallies.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheState<T> {
    capacity: usize,
    present: Vec<bool>,
    contents: Vec<usize>,
    tally: Vec<T>,
}

impl<T: Scalar> CacheState<T> {
    pub fn new(capacity: usize, num_contents: usize) -> Self {
        CacheState {
            capacity,
            present: vec![false; num_contents],
            contents: Vec::with_capacity(capacity),
            tally: Vec::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn num_contents(&self) -> usize {
        self.present.len()
    }

    pub fn len(&self) -> usize {
        self.contents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contents.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.contents.len() >= self.capacity
    }

    #[inline]
    pub fn contains(&self, f: usize) -> bool {
        self.present.get(f).copied().unwrap_or(false)
    }

    /// Cached content ids in insertion order.
    pub fn contents(&self) -> &[usize] {
        &self.contents
    }

    pub fn tallies(&self) -> &[T] {
        &self.tally
    }

    pub fn tally_of(&self, f: usize) -> Option<T> {
        self.position(f).map(|i| self.tally[i])
    }

    fn position(&self, f: usize) -> Option<usize> {
        if !self.contains(f) {
            return None;
        }
        self.contents.iter().position(|&c| c == f)
    }

    /// Inserts `f` unless it is already cached or the cache is full.
    pub fn insert(&mut self, f: usize, tally: T) -> bool {
        if self.contains(f) || self.is_full() || f >= self.present.len() {
            return false;
        }
        self.present[f] = true;
        self.contents.push(f);
        self.tally.push(tally);
        true
    }

    pub fn remove(&mut self, f: usize) -> bool {
        match self.position(f) {
            Some(i) => {
                self.present[f] = false;
                self.contents.swap_remove(i);
                self.tally.swap_remove(i);
                true
            }
            None => false,
        }
    }

    pub fn set_tally(&mut self, f: usize, value: T) {
        if let Some(i) = self.position(f) {
            self.tally[i] = value;
        }
    }

    /// Adds `mass(f)` to the tally of every cached content.
    pub fn accumulate_tally(&mut self, mut mass: impl FnMut(usize) -> T) {
        for (t, &f) in self.tally.iter_mut().zip(&self.contents) {
            *t = *t + mass(f);
        }
    }

    /// Content ids not currently cached, ascending.
    pub fn uncached(&self) -> Vec<usize> {
        (0..self.present.len()).filter(|&f| !self.present[f]).collect()
    }

    /// `epoch,sbs,content_id` lines, one per cached content.
    pub fn write_snapshot_csv<W: Write>(&self, epoch: u64, sbs: usize, mut out: W) -> Result<()> {
        let mut sorted = self.contents.clone();
        sorted.sort_unstable();
        for f in sorted {
            writeln!(out, "{epoch},{sbs},{f}")?;
        }
        Ok(())
    }
}

/// Fronthaul link between one SBS and the cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FronthaulModel<T> {
    /// `C_f`, bits/s shared by all SBSs.
    pub total_capacity: T,
    /// `C_s`, bits/s of this SBS's share.
    pub per_sbs_capacity: T,
    /// `l_p > 0`.
    pub overhead_const: T,
    /// `T₂`, in slots.
    pub epoch_slots: u64,
    pub content_size_bits: T,
    pub slot_seconds: T,
}

impl<T: Scalar> FronthaulModel<T> {
    /// Equal split `C_s = C_f / S`.
    pub fn equal_split(
        total_capacity: T,
        num_sbs: usize,
        overhead_const: T,
        epoch_slots: u64,
        content_size_bits: T,
        slot_seconds: T,
    ) -> Result<Self> {
        if num_sbs == 0 {
            return Err(Error::param("num_sbs", "must be positive"));
        }
        let fh = FronthaulModel {
            total_capacity,
            per_sbs_capacity: total_capacity / T::of_usize(num_sbs),
            overhead_const,
            epoch_slots,
            content_size_bits,
            slot_seconds,
        };
        fh.validate()?;
        Ok(fh)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.overhead_const > T::zero()) {
            return Err(Error::param("overhead_const", "l_p must be positive"));
        }
        if !(self.per_sbs_capacity > T::zero()) || self.per_sbs_capacity > self.total_capacity {
            return Err(Error::param(
                "per_sbs_capacity",
                "need 0 < C_s <= C_f",
            ));
        }
        if self.epoch_slots == 0 {
            return Err(Error::param("epoch_slots", "T2 must be at least 1"));
        }
        if !(self.content_size_bits > T::zero()) || !(self.slot_seconds > T::zero()) {
            return Err(Error::param("content_size_bits/slot_seconds", "must be positive"));
        }
        Ok(())
    }
}

/// Checks the shared-capacity constraint `Σ_s C_s ≤ C_f`.
pub fn check_capacity_shares<T: Scalar>(shares: &[T], total_capacity: T) -> Result<()> {
    let sum: T = shares.iter().copied().sum();
    if sum > total_capacity * (T::one() + T::epsilon()) {
        return Err(Error::param("per_sbs_capacity", "shares exceed total fronthaul capacity"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateCost<T> {
    pub tau_slots: T,
    pub epsilon: T,
}

/// `τ = l_p·N·(1/μ)/C_s` in slots and `ε = 1 − τ/T₂`. Fails when `τ ≥ T₂`.
pub fn update_cost<T: Scalar>(num_new_contents: usize, fh: &FronthaulModel<T>) -> Result<UpdateCost<T>> {
    let seconds = fh.overhead_const * T::of_usize(num_new_contents) * fh.content_size_bits
        / fh.per_sbs_capacity;
    let tau_slots = seconds / fh.slot_seconds;
    let epoch = T::of(fh.epoch_slots as f64);
    if !(tau_slots < epoch) {
        return Err(Error::InfeasibleUpdate {
            tau_slots: tau_slots.to_f64_lossy(),
            epoch_slots: fh.epoch_slots,
        });
    }
    Ok(UpdateCost {
        tau_slots,
        epsilon: T::one() - tau_slots / epoch,
    })
}

/// Eviction probabilities `∝ exp(−tally)`, aligned with `cache.contents()`.
pub fn gibbs_eviction_distribution<T: Scalar>(cache: &CacheState<T>) -> Result<Vec<T>> {
    if cache.is_empty() {
        return Err(Error::param("cache", "cannot evict from an empty cache"));
    }
    let exps: Vec<T> = cache.tally.iter().map(|t| -*t).collect();
    Ok(softmax(&exps))
}

/// `(1 − β)·π_s + β·π_c`.
pub fn mixed_policy<T: Scalar>(pi_local: &[T], pi_cloud: &[T], beta: T) -> Result<Vec<T>> {
    if pi_local.len() != pi_cloud.len() {
        return Err(Error::DimensionMismatch {
            expected: pi_local.len(),
            actual: pi_cloud.len(),
        });
    }
    if !(beta >= T::zero() && beta <= T::one()) {
        return Err(Error::param("beta", "must be in [0, 1]"));
    }
    Ok(pi_local
        .iter()
        .zip(pi_cloud)
        .map(|(&l, &c)| (T::one() - beta) * l + beta * c)
        .collect())
}

/// Re-expresses a policy over `from`'s classes on `to`'s classes: each
/// content receives an equal share of its class mass, and shares are summed
/// per target class.
pub fn map_policy<T: Scalar>(pi: &[T], from: &ClassPartition, to: &ClassPartition) -> Result<Vec<T>> {
    if pi.len() != from.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: from.num_classes(),
            actual: pi.len(),
        });
    }
    if from.num_contents() != to.num_contents() {
        return Err(Error::DimensionMismatch {
            expected: from.num_contents(),
            actual: to.num_contents(),
        });
    }
    let mut out = vec![T::zero(); to.num_classes()];
    for f in 0..from.num_contents() {
        let k = from.class_of(f);
        out[to.class_of(f)] = out[to.class_of(f)] + pi[k] / T::of_usize(from.class_size(k));
    }
    let total: T = out.iter().copied().sum();
    if total > T::zero() {
        out.iter_mut().for_each(|p| *p = *p / total);
    }
    Ok(out)
}

/// Result of one committed cache update.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheUpdate<T> {
    pub cache: CacheState<T>,
    pub evicted: Vec<usize>,
    pub inserted: Vec<usize>,
    /// `N`: inserted contents that were not cached before the update.
    pub fetched: usize,
    pub cost: UpdateCost<T>,
}

fn pick_uniform<R: Rng + ?Sized>(items: &[usize], rng: &mut R) -> Option<usize> {
    if items.is_empty() {
        None
    } else {
        Some(items[rng.random_range(0..items.len())])
    }
}

fn fetched_count<T: Scalar>(before: &CacheState<T>, inserted: &[usize]) -> usize {
    inserted.iter().filter(|&&f| !before.contains(f)).count()
}

/// Gibbs eviction of `evict_count` contents, then one class draw from
/// `mixed` per vacancy followed by a uniform uncached member of that class.
/// Inserted contents start with a zero tally.
pub fn cache_update<T: Scalar, R: Rng + ?Sized>(
    cache: &CacheState<T>,
    mixed: &[T],
    partition: &ClassPartition,
    evict_count: usize,
    fh: &FronthaulModel<T>,
    rng: &mut R,
) -> Result<CacheUpdate<T>> {
    if evict_count > cache.len() {
        return Err(Error::param("evict_count", "exceeds cached contents"));
    }
    if mixed.len() != partition.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: partition.num_classes(),
            actual: mixed.len(),
        });
    }
    if partition.num_contents() != cache.num_contents() {
        return Err(Error::DimensionMismatch {
            expected: cache.num_contents(),
            actual: partition.num_contents(),
        });
    }
    check_simplex(mixed, SIMPLEX_TOL)?;

    let mut next = cache.clone();
    let mut evicted = Vec::with_capacity(evict_count);
    for _ in 0..evict_count {
        let dist = gibbs_eviction_distribution(&next)?;
        let victim = next.contents[sample_from(&dist, rng)?];
        next.remove(victim);
        evicted.push(victim);
    }

    let mut inserted = Vec::with_capacity(evict_count);
    for _ in 0..evict_count {
        let mut choice = None;
        for _ in 0..partition.num_classes() {
            let k = sample_from(mixed, rng)?;
            let candidates: Vec<usize> = partition
                .members(k)
                .iter()
                .copied()
                .filter(|&f| !next.contains(f))
                .collect();
            if let Some(f) = pick_uniform(&candidates, rng) {
                choice = Some(f);
                break;
            }
        }
        let f = match choice {
            Some(f) => f,
            None => pick_uniform(&next.uncached(), rng).expect("a vacancy implies an uncached content"),
        };
        next.insert(f, T::zero());
        inserted.push(f);
    }

    let fetched = fetched_count(cache, &inserted);
    let cost = update_cost(fetched, fh)?;
    Ok(CacheUpdate {
        cache: next,
        evicted,
        inserted,
        fetched,
        cost,
    })
}

/// Random caching: uniform eviction and uniform refill from uncached contents.
pub fn random_replacement<T: Scalar, R: Rng + ?Sized>(
    cache: &CacheState<T>,
    evict_count: usize,
    fh: &FronthaulModel<T>,
    rng: &mut R,
) -> Result<CacheUpdate<T>> {
    if evict_count > cache.len() {
        return Err(Error::param("evict_count", "exceeds cached contents"));
    }
    let mut next = cache.clone();
    let mut evicted = Vec::with_capacity(evict_count);
    for _ in 0..evict_count {
        let victim = pick_uniform(&next.contents, rng).expect("non-empty");
        next.remove(victim);
        evicted.push(victim);
    }
    let mut inserted = Vec::with_capacity(evict_count);
    for _ in 0..evict_count {
        let f = pick_uniform(&next.uncached(), rng).expect("a vacancy implies an uncached content");
        next.insert(f, T::zero());
        inserted.push(f);
    }
    let fetched = fetched_count(cache, &inserted);
    let cost = update_cost(fetched, fh)?;
    Ok(CacheUpdate {
        cache: next,
        evicted,
        inserted,
        fetched,
        cost,
    })
}

/// Time-average popularity caching: the cache becomes the top contents by
/// cumulative demand (count descending, id ascending). Only contents with a
/// positive count are ranked; leftover slots keep currently cached contents.
pub fn time_average_update<T: Scalar>(
    cache: &CacheState<T>,
    cumulative_counts: &[u64],
    fh: &FronthaulModel<T>,
) -> Result<CacheUpdate<T>> {
    if cumulative_counts.len() != cache.num_contents() {
        return Err(Error::DimensionMismatch {
            expected: cache.num_contents(),
            actual: cumulative_counts.len(),
        });
    }
    let mut ranked: Vec<usize> = (0..cumulative_counts.len())
        .filter(|&f| cumulative_counts[f] > 0)
        .collect();
    ranked.sort_by(|&a, &b| cumulative_counts[b].cmp(&cumulative_counts[a]).then(a.cmp(&b)));
    ranked.truncate(cache.capacity());

    let mut target = vec![false; cache.num_contents()];
    for &f in &ranked {
        target[f] = true;
    }
    let mut next = cache.clone();
    let evicted: Vec<usize>;
    let inserted: Vec<usize> = ranked.iter().copied().filter(|&f| !cache.contains(f)).collect();
    {
        // evict the lowest-ranked cached contents that are not in the target
        let mut outsiders: Vec<usize> = cache.contents.iter().copied().filter(|&f| !target[f]).collect();
        outsiders.sort_by(|&a, &b| cumulative_counts[a].cmp(&cumulative_counts[b]).then(b.cmp(&a)));
        let need = (cache.len() + inserted.len()).saturating_sub(cache.capacity());
        evicted = outsiders.into_iter().take(need).collect();
    }
    for &f in &evicted {
        next.remove(f);
    }
    for &f in &inserted {
        next.insert(f, T::zero());
    }
    let fetched = inserted.len();
    let cost = update_cost(fetched, fh)?;
    Ok(CacheUpdate {
        cache: next,
        evicted,
        inserted,
        fetched,
        cost,
    })
}

/// `rate` if `f` is cached and the rate clears `g_min`, otherwise zero.
pub fn reward<T: Scalar>(f: usize, cache: &CacheState<T>, rate: T, g_min: T) -> T {
    if cache.contains(f) && rate > g_min {
        rate
    } else {
        T::zero()
    }
}
