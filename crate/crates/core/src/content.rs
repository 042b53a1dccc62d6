//! Content library, multi-class popularity process and request generation.
//!
//! Popularity is defined per class: every content in a class is equally
//! popular. Class weights follow a Zipf law over class rank and drift over
//! time by mixing with Dirichlet draws. Each SBS cell additionally carries a
//! fixed Dirichlet tilt that skews the class weights its UEs see.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::net::{Coverage, Deployment};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Library {
    pub num_contents: usize,
    pub content_size_bits: f64,
    /// Ground-truth class of each content.
    pub class_of: Vec<usize>,
    /// Members of each ground-truth class, ascending.
    pub classes: Vec<Vec<usize>>,
    pub class_popularity: Vec<f64>,
}

impl Library {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Request probability of a single content.
    pub fn content_popularity(&self, f: usize) -> f64 {
        let k = self.class_of[f];
        self.class_popularity[k] / self.classes[k].len() as f64
    }

    pub fn content_popularities(&self) -> Vec<f64> {
        (0..self.num_contents).map(|f| self.content_popularity(f)).collect()
    }
}

/// Default content size, 10 Mbit.
pub const DEFAULT_CONTENT_SIZE_BITS: f64 = 10.0e6;

/// Builds a library of `num_contents` items split into `num_classes` classes
/// of near-equal size (assignment is a random permutation) with Zipf class
/// weights `k^(−s)` over class rank `k = 1..K`.
pub fn init_popularity<R: Rng + ?Sized>(
    num_contents: usize,
    num_classes: usize,
    zipf_exponent: f64,
    rng: &mut R,
) -> Result<Library> {
    if num_classes == 0 || num_classes > num_contents {
        return Err(Error::param(
            "num_classes",
            format!("must be in 1..={num_contents}"),
        ));
    }
    if !(zipf_exponent >= 0.0) || !zipf_exponent.is_finite() {
        return Err(Error::param("zipf_exponent", "must be a finite value >= 0"));
    }
    let mut order: Vec<usize> = (0..num_contents).collect();
    order.shuffle(rng);

    let mut classes = vec![Vec::new(); num_classes];
    let mut class_of = vec![0; num_contents];
    for (rank, f) in order.into_iter().enumerate() {
        let k = rank * num_classes / num_contents;
        classes[k].push(f);
        class_of[f] = k;
    }
    for members in &mut classes {
        members.sort_unstable();
    }
    let raw: Vec<f64> = (1..=num_classes)
        .map(|k| (k as f64).powf(-zipf_exponent))
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(Library {
        num_contents,
        content_size_bits: DEFAULT_CONTENT_SIZE_BITS,
        class_of,
        classes,
        class_popularity: raw.into_iter().map(|w| w / total).collect(),
    })
}

fn dirichlet<R: Rng + ?Sized>(dim: usize, concentration: f64, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
    let mut draw: Vec<f64> = (0..dim).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draw.iter().sum();
    if total > 0.0 {
        draw.iter_mut().for_each(|x| *x /= total);
    } else {
        draw.iter_mut().for_each(|x| *x = 1.0 / dim as f64);
    }
    draw
}

/// One step of the popularity random walk: class weights become
/// `(1 − drift)·w + drift·Dir(1, …, 1)`. `drift = 0` leaves the library
/// untouched and consumes no randomness.
pub fn evolve_popularity<R: Rng + ?Sized>(lib: &Library, drift: f64, rng: &mut R) -> Result<Library> {
    let mut next = lib.clone();
    evolve_popularity_in_place(&mut next, drift, rng)?;
    Ok(next)
}

pub(crate) fn evolve_popularity_in_place<R: Rng + ?Sized>(
    lib: &mut Library,
    drift: f64,
    rng: &mut R,
) -> Result<()> {
    if !(0.0..=1.0).contains(&drift) {
        return Err(Error::param("drift", "must be in [0, 1]"));
    }
    if drift == 0.0 {
        return Ok(());
    }
    let noise = dirichlet(lib.num_classes(), 1.0, rng);
    let mut total = 0.0;
    for (w, n) in lib.class_popularity.iter_mut().zip(noise) {
        *w = (1.0 - drift) * *w + drift * n;
        total += *w;
    }
    lib.class_popularity.iter_mut().for_each(|w| *w /= total);
    Ok(())
}

/// Per-cell class tilts and the home cell of every UE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialProfile {
    pub cell_of_ue: Vec<usize>,
    /// One class-weight vector per SBS cell.
    pub tilts: Vec<Vec<f64>>,
}

impl SpatialProfile {
    /// Home cell = geometrically closest SBS; tilts drawn from
    /// `Dir(concentration)` per cell.
    pub fn random<R: Rng + ?Sized>(
        dep: &Deployment,
        num_classes: usize,
        concentration: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(concentration > 0.0) {
            return Err(Error::param("tilt_concentration", "must be positive"));
        }
        let tilts = (0..dep.num_sbs())
            .map(|_| dirichlet(num_classes, concentration, rng))
            .collect();
        let cell_of_ue = (0..dep.num_ues()).map(|u| dep.closest_sbs(u)).collect();
        Ok(SpatialProfile { cell_of_ue, tilts })
    }

    /// Class weights seen by UEs of `cell`.
    pub fn cell_weights(&self, lib: &Library, cell: usize, local_skew: f64) -> Vec<f64> {
        lib.class_popularity
            .iter()
            .zip(&self.tilts[cell])
            .map(|(g, t)| (1.0 - local_skew) * g + local_skew * t)
            .collect()
    }
}

/// Requests of one slot: entry `u` is UE `u`'s content, `None` for no request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestTrace {
    pub slot: u64,
    pub demands: Vec<Option<usize>>,
}

impl RequestTrace {
    pub fn requests(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.demands
            .iter()
            .enumerate()
            .filter_map(|(u, q)| q.map(|f| (u, f)))
    }

    pub fn num_requests(&self) -> usize {
        self.demands.iter().filter(|q| q.is_some()).count()
    }
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return i;
        }
        target -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Draws one slot of requests. Every UE consumes exactly one uniform for the
/// request decision and, when it requests, one for the class and one for the
/// content; the stream therefore depends only on the traffic state.
pub fn generate_requests<R: Rng + ?Sized>(
    lib: &Library,
    profile: &SpatialProfile,
    request_prob: f64,
    local_skew: f64,
    slot: u64,
    rng: &mut R,
) -> Result<RequestTrace> {
    if !(0.0..=1.0).contains(&request_prob) {
        return Err(Error::param("request_prob", "must be in [0, 1]"));
    }
    if !(0.0..=1.0).contains(&local_skew) {
        return Err(Error::param("local_skew", "must be in [0, 1]"));
    }
    let cells = profile.tilts.len();
    let cell_weights: Vec<Vec<f64>> = (0..cells)
        .map(|c| profile.cell_weights(lib, c, local_skew))
        .collect();
    let demands = profile
        .cell_of_ue
        .iter()
        .map(|&cell| {
            if rng.random::<f64>() >= request_prob {
                return None;
            }
            let k = sample_index(&cell_weights[cell], rng);
            let members = &lib.classes[k];
            Some(members[rng.random_range(0..members.len())])
        })
        .collect();
    Ok(RequestTrace { slot, demands })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandVector {
    pub counts: Vec<u64>,
    pub window_slots: u64,
}

impl DemandVector {
    pub fn zeros(num_contents: usize) -> Self {
        DemandVector {
            counts: vec![0; num_contents],
            window_slots: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn add(&mut self, other: &DemandVector) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.window_slots += other.window_slots;
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.window_slots = 0;
    }
}

/// Per-SBS demand vectors for one slot plus the network-wide sum. A request
/// is counted at every SBS covering the requesting UE.
pub fn accumulate_demand(
    trace: &RequestTrace,
    coverage: &Coverage,
    num_sbs: usize,
    num_contents: usize,
) -> (Vec<DemandVector>, DemandVector) {
    let mut per_sbs = vec![
        DemandVector {
            counts: vec![0; num_contents],
            window_slots: 1
        };
        num_sbs
    ];
    let mut network = DemandVector {
        counts: vec![0; num_contents],
        window_slots: 1,
    };
    add_slot_demand(trace, coverage, &mut per_sbs, &mut network);
    (per_sbs, network)
}

/// Adds one slot's requests to running per-SBS and network windows without
/// advancing `window_slots`.
pub fn add_slot_demand(
    trace: &RequestTrace,
    coverage: &Coverage,
    per_sbs: &mut [DemandVector],
    network: &mut DemandVector,
) {
    for (u, f) in trace.requests() {
        for &s in coverage.sbs_for(u) {
            per_sbs[s].counts[f] += 1;
            network.counts[f] += 1;
        }
    }
}

/// Running SHA-256 over `(slot, ue, content)` of every request.
#[derive(Debug, Clone, Default)]
pub struct TraceDigest(Sha256);

impl TraceDigest {
    pub fn update(&mut self, trace: &RequestTrace) {
        for (u, f) in trace.requests() {
            self.0.update(trace.slot.to_le_bytes());
            self.0.update((u as u64).to_le_bytes());
            self.0.update((f as u64).to_le_bytes());
        }
    }

    pub fn hex(&self) -> String {
        self.0
            .clone()
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Writes traces as `slot,ue,content` CSV lines; slots without a request
/// from a UE are written with an empty content column.
pub fn write_traces<W: Write>(traces: &[RequestTrace], mut out: W) -> Result<()> {
    writeln!(out, "slot,ue,content")?;
    for t in traces {
        for (u, q) in t.demands.iter().enumerate() {
            match q {
                Some(f) => writeln!(out, "{},{},{}", t.slot, u, f)?,
                None => writeln!(out, "{},{},", t.slot, u)?,
            }
        }
    }
    Ok(())
}

pub fn read_traces<R: BufRead>(input: R) -> Result<Vec<RequestTrace>> {
    let mut traces: Vec<RequestTrace> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if idx == 0 && line.trim() == "slot,ue,content" || line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::Parse {
            line: line_no,
            reason: format!("{reason}: `{line}`"),
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(bad("expected 3 fields"));
        }
        let slot: u64 = fields[0].parse().map_err(|_| bad("bad slot"))?;
        let ue: usize = fields[1].parse().map_err(|_| bad("bad ue"))?;
        let content = if fields[2].is_empty() {
            None
        } else {
            Some(fields[2].parse().map_err(|_| bad("bad content"))?)
        };
        if traces.last().is_none_or(|t| t.slot != slot) {
            traces.push(RequestTrace {
                slot,
                demands: Vec::new(),
            });
        }
        let t = traces.last_mut().expect("pushed above");
        if ue != t.demands.len() {
            return Err(bad("ue indices must be consecutive within a slot"));
        }
        t.demands.push(content);
    }
    Ok(traces)
}
