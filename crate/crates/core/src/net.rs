//! Random deployments, fading channel gains and SINR-based rates.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::caching::CacheState;
use crate::{Error, Result, Scalar};

/// Distances below this are clamped before applying the pathloss law.
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// SBS and UE positions inside a square window `[0, area_side]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub sbs_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
    pub area_side: f64,
    pub lambda_sbs: f64,
    pub lambda_ue: f64,
}

impl Deployment {
    pub fn num_sbs(&self) -> usize {
        self.sbs_positions.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn distance(&self, sbs: usize, ue: usize) -> f64 {
        self.sbs_positions[sbs].distance(&self.ue_positions[ue])
    }

    /// Index of the geometrically closest SBS to `ue` (lowest index on ties).
    pub fn closest_sbs(&self, ue: usize) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for s in 0..self.num_sbs() {
            let d = self.distance(s, ue);
            if d < best_d {
                best = s;
                best_d = d;
            }
        }
        best
    }
}

/// Draws a homogeneous Poisson point process realization for each tier.
///
/// A draw with no SBS is discarded and redrawn from the same stream; the
/// number of redraws is logged.
pub fn generate_deployment(
    lambda_sbs: f64,
    lambda_ue: f64,
    area_side: f64,
    rng_seed: u64,
) -> Result<Deployment> {
    if !(lambda_sbs > 0.0) || !lambda_sbs.is_finite() {
        return Err(Error::param("lambda_sbs", "must be positive"));
    }
    if !(lambda_ue > 0.0) || !lambda_ue.is_finite() {
        return Err(Error::param("lambda_ue", "must be positive"));
    }
    if !(area_side > 0.0) || !area_side.is_finite() {
        return Err(Error::param("area_side", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let area = area_side * area_side;
    let sbs_law = Poisson::new(lambda_sbs * area)
        .map_err(|e| Error::param("lambda_sbs", e.to_string()))?;
    let ue_law =
        Poisson::new(lambda_ue * area).map_err(|e| Error::param("lambda_ue", e.to_string()))?;

    let mut resamples = 0u32;
    let num_sbs = loop {
        let n = sbs_law.sample(&mut rng) as usize;
        if n > 0 {
            break n;
        }
        resamples += 1;
    };
    if resamples > 0 {
        log::warn!("deployment seed {rng_seed}: redrew SBS count {resamples} time(s) to avoid an empty network");
    }
    let num_ues = ue_law.sample(&mut rng) as usize;

    let mut draw = |n: usize| -> Vec<Point> {
        (0..n)
            .map(|_| Point::new(rng.random::<f64>() * area_side, rng.random::<f64>() * area_side))
            .collect()
    };
    let sbs_positions = draw(num_sbs);
    let ue_positions = draw(num_ues);
    Ok(Deployment {
        sbs_positions,
        ue_positions,
        area_side,
        lambda_sbs,
        lambda_ue,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<T> {
    pub tx_power_dbm: T,
    /// Noise power in watts.
    pub noise_variance: T,
    pub pathloss_exponent: T,
    pub bandwidth_hz: T,
}

impl<T: Scalar> ChannelParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.pathloss_exponent > T::of(2.0)) {
            return Err(Error::param("pathloss_exponent", "must exceed 2"));
        }
        if !(self.bandwidth_hz > T::zero()) {
            return Err(Error::param("bandwidth_hz", "must be positive"));
        }
        if !(self.noise_variance > T::zero()) {
            return Err(Error::param("noise_variance", "must be positive"));
        }
        Ok(())
    }

    /// Transmit power in watts.
    pub fn tx_power_w(&self) -> T {
        T::of(10.0).powf((self.tx_power_dbm - T::of(30.0)) / T::of(10.0))
    }
}

impl Default for ChannelParams<f64> {
    fn default() -> Self {
        let bandwidth_hz: f64 = 1.4e6;
        // thermal noise floor, -174 dBm/Hz over the band
        let noise_dbm = -174.0 + 10.0 * bandwidth_hz.log10();
        ChannelParams {
            tx_power_dbm: 23.0,
            noise_variance: 10f64.powf((noise_dbm - 30.0) / 10.0),
            pathloss_exponent: 4.0,
            bandwidth_hz,
        }
    }
}

/// Per-slot power gains, `S × U`, row-major by SBS.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix<T> {
    num_sbs: usize,
    num_ues: usize,
    data: Vec<T>,
}

impl<T: Scalar> GainMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let num_sbs = rows.len();
        let num_ues = rows.first().map_or(0, Vec::len);
        let data = rows.into_iter().flatten().collect::<Vec<_>>();
        assert_eq!(data.len(), num_sbs * num_ues, "ragged gain rows");
        GainMatrix {
            num_sbs,
            num_ues,
            data,
        }
    }

    #[inline]
    pub fn get(&self, sbs: usize, ue: usize) -> T {
        self.data[sbs * self.num_ues + ue]
    }

    pub fn num_sbs(&self) -> usize {
        self.num_sbs
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }
}

/// Pathloss-only gain `max(d, 1 m)^(−η)`.
pub fn pathloss<T: Scalar>(distance_m: f64, exponent: T) -> T {
    T::of(distance_m.max(MIN_DISTANCE_M)).powf(-exponent)
}

/// Rayleigh-faded gains: an independent unit-mean exponential per link times
/// pathloss. Consumes exactly `S × U` exponential draws from `rng`.
pub fn sample_gains<T: Scalar, R: Rng + ?Sized>(
    dep: &Deployment,
    ch: &ChannelParams<T>,
    rng: &mut R,
) -> GainMatrix<T> {
    let (s_count, u_count) = (dep.num_sbs(), dep.num_ues());
    let mut data = Vec::with_capacity(s_count * u_count);
    for s in 0..s_count {
        for u in 0..u_count {
            let fading: f64 = Exp1.sample(rng);
            data.push(T::of(fading) * pathloss(dep.distance(s, u), ch.pathloss_exponent));
        }
    }
    GainMatrix {
        num_sbs: s_count,
        num_ues: u_count,
        data,
    }
}

/// Shannon rate of UE `u` served by SBS `s` with the listed SBSs interfering.
pub fn instantaneous_rate<T: Scalar>(
    s: usize,
    u: usize,
    gains: &GainMatrix<T>,
    ch: &ChannelParams<T>,
    active_interferers: &[usize],
) -> Result<T> {
    if active_interferers.contains(&s) {
        return Err(Error::SelfInterference(s));
    }
    Ok(rate_unchecked(s, u, gains, ch, active_interferers, ch.bandwidth_hz))
}

pub(crate) fn rate_unchecked<T: Scalar>(
    s: usize,
    u: usize,
    gains: &GainMatrix<T>,
    ch: &ChannelParams<T>,
    interferers: &[usize],
    bandwidth: T,
) -> T {
    let p = ch.tx_power_w();
    let interference: T = interferers.iter().map(|&i| p * gains.get(i, u)).sum();
    let sinr = p * gains.get(s, u) / (ch.noise_variance + interference);
    bandwidth * (T::one() + sinr).log2()
}

/// Nearest SBS within `coverage_radius` of `u` whose cache holds `f`.
/// Ties go to the lowest SBS index; `None` is a cache miss.
pub fn nearest_cached_sbs<T: Scalar>(
    u: usize,
    f: usize,
    dep: &Deployment,
    caches: &[CacheState<T>],
    coverage_radius: f64,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (s, cache) in caches.iter().enumerate() {
        if !cache.contains(f) {
            continue;
        }
        let d = dep.distance(s, u);
        if d > coverage_radius {
            continue;
        }
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((s, d));
        }
    }
    best.map(|(s, _)| s)
}

/// Which SBSs cover each UE, sorted by distance then index, and the inverse.
#[derive(Debug, Clone)]
pub struct Coverage {
    pub radius: f64,
    by_ue: Vec<Vec<usize>>,
    by_sbs: Vec<Vec<usize>>,
}

impl Coverage {
    pub fn new(dep: &Deployment, radius: f64) -> Self {
        let mut by_ue = Vec::with_capacity(dep.num_ues());
        let mut by_sbs = vec![Vec::new(); dep.num_sbs()];
        for u in 0..dep.num_ues() {
            let mut covering: Vec<(f64, usize)> = (0..dep.num_sbs())
                .map(|s| (dep.distance(s, u), s))
                .filter(|(d, _)| *d <= radius)
                .collect();
            covering.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, s) in &covering {
                by_sbs[s].push(u);
            }
            by_ue.push(covering.into_iter().map(|(_, s)| s).collect());
        }
        Coverage {
            radius,
            by_ue,
            by_sbs,
        }
    }

    /// Covering SBSs of `ue`, nearest first.
    pub fn sbs_for(&self, ue: usize) -> &[usize] {
        &self.by_ue[ue]
    }

    pub fn ues_of(&self, sbs: usize) -> &[usize] {
        &self.by_sbs[sbs]
    }

    /// Same answer as [`nearest_cached_sbs`], using the presorted lists.
    pub fn nearest_cached<T: Scalar>(&self, ue: usize, f: usize, caches: &[CacheState<T>]) -> Option<usize> {
        self.by_ue[ue].iter().copied().find(|&s| caches[s].contains(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn line_deployment(sbs_x: &[f64], ue_x: &[f64]) -> Deployment {
        Deployment {
            sbs_positions: sbs_x.iter().map(|&x| Point::new(x, 0.0)).collect(),
            ue_positions: ue_x.iter().map(|&x| Point::new(x, 0.0)).collect(),
            area_side: 1000.0,
            lambda_sbs: 1e-4,
            lambda_ue: 1e-4,
        }
    }

    fn params(noise: f64) -> ChannelParams<f64> {
        ChannelParams {
            tx_power_dbm: 30.0, // 1 W
            noise_variance: noise,
            pathloss_exponent: 4.0,
            bandwidth_hz: 1.0e6,
        }
    }

    #[test]
    fn rejects_degenerate_window() {
        assert!(generate_deployment(1e-4, 1e-4, 0.0, 1).is_err());
        assert!(generate_deployment(0.0, 1e-4, 10.0, 1).is_err());
    }

    #[test]
    fn deployment_is_deterministic_and_inside_window() {
        let a = generate_deployment(1e-4, 3e-4, 500.0, 9).unwrap();
        let b = generate_deployment(1e-4, 3e-4, 500.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.num_sbs() >= 1);
        for p in a.sbs_positions.iter().chain(&a.ue_positions) {
            assert!((0.0..=500.0).contains(&p.x) && (0.0..=500.0).contains(&p.y));
        }
    }

    #[test]
    fn tiny_intensity_still_yields_an_sbs() {
        let d = generate_deployment(1e-9, 1e-9, 10.0, 3).unwrap();
        assert!(d.num_sbs() >= 1);
    }

    #[test]
    fn pathloss_unit_and_power_law() {
        assert_eq!(pathloss(1.0, 4.0f64), 1.0);
        assert!((pathloss(10.0, 4.0f64) - 1e-4).abs() < 1e-18);
        assert_eq!(pathloss(0.2, 4.0f64), 1.0);
    }

    #[test]
    fn rate_closed_forms() {
        let ch = params(1.0);
        // p·g = σ²
        let g = GainMatrix::from_rows(vec![vec![1.0], vec![1.0]]);
        let r = instantaneous_rate(0, 0, &g, &ch, &[]).unwrap();
        assert!((r - ch.bandwidth_hz).abs() < 1e-6);

        let zero = GainMatrix::from_rows(vec![vec![0.0], vec![1.0]]);
        assert_eq!(instantaneous_rate(0, 0, &zero, &ch, &[1]).unwrap(), 0.0);

        // SIR = 1 with negligible noise
        let ch = params(1e-30);
        let r = instantaneous_rate(0, 0, &g, &ch, &[1]).unwrap();
        assert!((r - ch.bandwidth_hz).abs() < 1e-3);
    }

    #[test]
    fn rate_rejects_self_interference() {
        let g = GainMatrix::from_rows(vec![vec![1.0]]);
        assert_eq!(
            instantaneous_rate(0, 0, &g, &params(1.0), &[0]),
            Err(Error::SelfInterference(0))
        );
    }

    #[test]
    fn mean_fading_matches_pathloss() {
        let dep = line_deployment(&[0.0], &[10.0]);
        let ch = params(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| sample_gains(&dep, &ch, &mut rng).get(0, 0))
            .sum::<f64>()
            / n as f64;
        assert!((mean / 1e-4 - 1.0).abs() < 0.05, "mean gain {mean}");
    }

    #[test]
    fn nearest_cached_ordering_miss_and_ties() {
        let dep = line_deployment(&[80.0, 50.0, -50.0], &[0.0]);
        let mut caches = vec![CacheState::<f64>::new(2, 4); 3];
        assert_eq!(nearest_cached_sbs(0, 1, &dep, &caches, 200.0), None);
        caches[0].insert(1, 0.0);
        caches[1].insert(1, 0.0);
        assert_eq!(nearest_cached_sbs(0, 1, &dep, &caches, 200.0), Some(1));
        caches[2].insert(1, 0.0);
        // SBS 1 and 2 are both 50 m away
        assert_eq!(nearest_cached_sbs(0, 1, &dep, &caches, 200.0), Some(1));
        assert_eq!(nearest_cached_sbs(0, 1, &dep, &caches, 40.0), None);
        let cov = Coverage::new(&dep, 200.0);
        assert_eq!(cov.sbs_for(0), &[1, 2, 0]);
        assert_eq!(cov.nearest_cached(0, 1, &caches), Some(1));
    }
}
