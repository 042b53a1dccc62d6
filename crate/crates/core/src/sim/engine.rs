//! Slot-level event loop for one replication.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Feedback, InterferenceModel, Scheme, SimConfig};
use super::metrics::{EpochMetrics, MetricsRecord};
use crate::caching::{
    self, cache_update, map_policy, mixed_policy, random_replacement, time_average_update, CacheState,
    CacheUpdate, FronthaulModel,
};
use crate::clustering::{
    cluster_weighted_demand, estimate_popularity, median_heuristic_sigma, mix_demand, weighted_demand,
    ClassPartition, ClusterParams,
};
use crate::content::{
    add_slot_demand, evolve_popularity_in_place, generate_requests, init_popularity, DemandVector,
    Library, SpatialProfile, TraceDigest,
};
use crate::learning::{cloud_learner_step, learner_step_joint, CloudReport, LearnerState, LearningSchedule, Trajectory};
use crate::net::{generate_deployment, rate_unchecked, sample_gains, ChannelParams, Coverage, Deployment};
use crate::{Error, Result};

// Independent random streams of one replication. Everything except the
// policy and clustering streams is consumed identically by every scheme.
const STREAM_CONTENT: u64 = 1;
const STREAM_TRAFFIC: u64 = 2;
const STREAM_FADING: u64 = 3;
const STREAM_FILL: u64 = 4;
const STREAM_POLICY: u64 = 5;
const STREAM_CLUSTER: u64 = 6;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// One line of the JSON-lines event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    /// A request; `sbs` is `None` on a miss.
    Request {
        slot: u64,
        ue: usize,
        content: usize,
        sbs: Option<usize>,
        rate: f64,
        reward: f64,
    },
    /// Utility of one SBS over an epoch.
    Epoch {
        epoch: u64,
        sbs: usize,
        epsilon: f64,
        utility: f64,
    },
    /// `epsilon` is `None` when the update was deferred as infeasible.
    CacheUpdate {
        slot: u64,
        sbs: usize,
        evicted: Vec<usize>,
        inserted: Vec<usize>,
        fetched: usize,
        epsilon: Option<f64>,
    },
    Recluster {
        slot: u64,
        sbs: usize,
        num_classes: usize,
    },
}

/// Optional per-run dumps.
#[derive(Debug, Default)]
pub struct Diagnostics {
    pub events: Vec<Event>,
    /// One per SBS; empty for the baselines.
    pub trajectories: Vec<Trajectory>,
    pub cloud_trajectory: Trajectory,
    /// `epoch,sbs,content_id` lines.
    pub cache_snapshots: Vec<u8>,
    /// `(slot, sbs, partition)`; `sbs = None` for the cloud partition.
    pub partitions: Vec<(u64, Option<usize>, ClassPartition)>,
}

impl Diagnostics {
    pub fn write_events<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for e in &self.events {
            let line = serde_json::to_string(e).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

struct Agent {
    partition: ClassPartition,
    learner: LearnerState<f64>,
    /// Content inserted at the previous update; its class is the action played.
    played: Option<usize>,
    /// Cumulative per-content policy mass.
    mass: Vec<f64>,
}

struct Cloud {
    partition: ClassPartition,
    learner: LearnerState<f64>,
}

/// Carries learner estimates over to a new partition: each content inherits
/// its old class's estimates, which are then averaged per new class; the
/// policy mass is re-aggregated.
pub fn remap_learner(
    state: &LearnerState<f64>,
    from: &ClassPartition,
    to: &ClassPartition,
) -> Result<LearnerState<f64>> {
    let k = to.num_classes();
    let mut utility = vec![0.0; k];
    let mut regret = vec![0.0; k];
    for (c, (u, r)) in utility.iter_mut().zip(regret.iter_mut()).enumerate() {
        let members = to.members(c);
        for &f in members {
            *u += state.utility_est[from.class_of(f)];
            *r += state.regret_est[from.class_of(f)];
        }
        *u /= members.len() as f64;
        *r /= members.len() as f64;
    }
    Ok(LearnerState {
        utility_est: utility,
        regret_est: regret,
        policy: map_policy(&state.policy, from, to)?,
        temperature: state.temperature,
        step: state.step,
    })
}

/// Mean reward per cached content of every class present in the cache.
fn slot_utilities(
    cache: &CacheState<f64>,
    partition: &ClassPartition,
    content_reward: &[f64],
    scale: f64,
) -> Vec<(usize, f64)> {
    let mut acc: Vec<(usize, f64, usize)> = Vec::new();
    for &f in cache.contents() {
        let k = partition.class_of(f);
        match acc.iter_mut().find(|e| e.0 == k) {
            Some(e) => {
                e.1 += content_reward[f];
                e.2 += 1;
            }
            None => acc.push((k, content_reward[f], 1)),
        }
    }
    acc.sort_unstable_by_key(|e| e.0);
    acc.into_iter().map(|(k, r, n)| (k, scale * r / n as f64)).collect()
}

/// Mean reward per cached content of `class`, scaled by `scale`.
fn class_utility(
    cache: &CacheState<f64>,
    partition: &ClassPartition,
    class: usize,
    content_reward: &[f64],
    scale: f64,
) -> f64 {
    let (sum, n) = cache
        .contents()
        .iter()
        .filter(|&&f| partition.class_of(f) == class)
        .fold((0.0, 0usize), |(s, n), &f| (s + content_reward[f], n + 1));
    if n == 0 {
        0.0
    } else {
        scale * sum / n as f64
    }
}

fn cluster_demand(
    demand: &[f64],
    sigma_l: Option<f64>,
    params: &ClusterParams,
    rng: &mut ChaCha8Rng,
) -> Result<ClassPartition> {
    let pop = estimate_popularity(demand);
    let sigma = match sigma_l {
        Some(s) => s,
        None => median_heuristic_sigma(&weighted_demand(demand, &pop)?),
    };
    Ok(cluster_weighted_demand(demand, &pop, sigma, params, rng)?.partition)
}

struct Replication<'a> {
    cfg: &'a SimConfig,
    scheme: Scheme,
    dep: Deployment,
    coverage: Coverage,
    channel: ChannelParams<f64>,
    fronthaul: FronthaulModel<f64>,
    schedule: LearningSchedule<f64>,
    lib: Library,
    profile: SpatialProfile,
    caches: Vec<CacheState<f64>>,
    agents: Vec<Agent>,
    cloud: Option<Cloud>,
    epsilon: Vec<f64>,
    rngs: [ChaCha8Rng; 5],
    // epoch accumulators
    epoch_reward: Vec<f64>,
    content_reward: Vec<Vec<f64>>,
    epoch_requests: u64,
    epoch_hits: u64,
    // demand windows
    window: Vec<DemandVector>,
    network_window: DemandVector,
    cumulative: Vec<DemandVector>,
    record: MetricsRecord,
    digest: TraceDigest,
    diag: Option<&'a mut Diagnostics>,
}

const R_CONTENT: usize = 0;
const R_TRAFFIC: usize = 1;
const R_FADING: usize = 2;
const R_POLICY: usize = 3;
const R_CLUSTER: usize = 4;

impl<'a> Replication<'a> {
    fn new(cfg: &'a SimConfig, seed: u64, diag: Option<&'a mut Diagnostics>) -> Result<Self> {
        cfg.validate()?;
        let n = &cfg.network;
        let c = &cfg.content;
        let f = c.num_contents;
        let scheme = cfg.sim.scheme;
        let dep = generate_deployment(n.lambda_sbs, n.lambda_ue, n.area_side, seed)?;
        let s_count = dep.num_sbs();
        let coverage = Coverage::new(&dep, n.coverage_radius);

        let mut content_rng = stream(seed, STREAM_CONTENT);
        let mut lib = init_popularity(f, c.num_classes, c.zipf_exponent, &mut content_rng)?;
        lib.content_size_bits = c.content_size_bits;
        let profile = SpatialProfile::random(&dep, c.num_classes, c.tilt_concentration, &mut content_rng)?;

        let d = cfg.caching.capacity;
        let mut fill = stream(seed, STREAM_FILL);
        let caches: Vec<CacheState<f64>> = (0..s_count)
            .map(|_| {
                let mut cache = CacheState::new(d, f);
                for g in sample(&mut fill, f, d).into_iter() {
                    cache.insert(g, 0.0);
                }
                cache
            })
            .collect();

        let (agents, cloud) = if scheme.is_learning() {
            let part = match scheme {
                Scheme::ProposedNoClustering => ClassPartition::singletons(f),
                _ => ClassPartition::single(f),
            };
            let agents = (0..s_count)
                .map(|_| {
                    Ok(Agent {
                        partition: part.clone(),
                        learner: LearnerState::new(part.num_classes(), cfg.learning.xi_s)?,
                        played: None,
                        mass: vec![0.0; f],
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let cloud = Cloud {
                learner: LearnerState::new(part.num_classes(), cfg.learning.xi_c)?,
                partition: part,
            };
            (agents, Some(cloud))
        } else {
            (Vec::new(), None)
        };

        let mut diag = diag;
        if let Some(dg) = diag.as_deref_mut() {
            dg.trajectories = vec![Trajectory::default(); agents.len()];
        }

        let record = MetricsRecord {
            scheme,
            seed,
            num_sbs: s_count,
            num_ues: dep.num_ues(),
            per_sbs_utility: vec![0.0; s_count],
            mean_utility: 0.0,
            requests: 0,
            hits: 0,
            hit_rate: 0.0,
            no_requests: false,
            mean_epsilon: 0.0,
            infeasible_updates: 0,
            clustering_slots: Vec::new(),
            update_slots: Vec::new(),
            epochs: Vec::new(),
            trace_digest: String::new(),
        };

        Ok(Replication {
            cfg,
            scheme,
            coverage,
            channel: n.channel(),
            fronthaul: cfg.fronthaul(s_count)?,
            schedule: cfg.schedule()?,
            lib,
            profile,
            caches,
            agents,
            cloud,
            epsilon: vec![1.0; s_count],
            rngs: [
                content_rng,
                stream(seed, STREAM_TRAFFIC),
                stream(seed, STREAM_FADING),
                stream(seed, STREAM_POLICY),
                stream(seed, STREAM_CLUSTER),
            ],
            epoch_reward: vec![0.0; s_count],
            content_reward: vec![vec![0.0; f]; s_count],
            epoch_requests: 0,
            epoch_hits: 0,
            window: vec![DemandVector::zeros(f); s_count],
            network_window: DemandVector::zeros(f),
            cumulative: vec![DemandVector::zeros(f); s_count],
            record,
            digest: TraceDigest::default(),
            diag,
            dep,
        })
    }

    fn emit(&mut self, e: impl FnOnce() -> Event) {
        if let Some(d) = self.diag.as_deref_mut() {
            d.events.push(e());
        }
    }

    fn run(mut self) -> Result<MetricsRecord> {
        let cfg = self.cfg;
        let (t1, t2) = (cfg.sim.t1, cfg.sim.t2);
        for slot in 0..cfg.sim.slots_total {
            self.serve_slot(slot)?;
            let elapsed = slot + 1;
            if elapsed % cfg.content.drift_period == 0 {
                evolve_popularity_in_place(&mut self.lib, cfg.content.drift, &mut self.rngs[R_CONTENT])?;
            }
            if elapsed % t2 == 0 || elapsed == cfg.sim.slots_total {
                self.close_epoch();
            }
            if elapsed % t2 == 0 {
                if self.scheme.is_learning() {
                    self.learn()?;
                }
                if elapsed % t1 == 0 {
                    if self.scheme == Scheme::Proposed {
                        self.recluster(elapsed)?;
                    }
                    self.window.iter_mut().for_each(DemandVector::clear);
                    self.network_window.clear();
                }
                self.update_caches(elapsed)?;
                self.reset_epoch();
            }
        }
        Ok(self.finish())
    }

    fn serve_slot(&mut self, slot: u64) -> Result<()> {
        let cfg = self.cfg;
        let trace = generate_requests(
            &self.lib,
            &self.profile,
            cfg.content.request_prob,
            cfg.content.local_skew,
            slot,
            &mut self.rngs[R_TRAFFIC],
        )?;
        self.digest.update(&trace);
        let gains = sample_gains(&self.dep, &self.channel, &mut self.rngs[R_FADING]);

        let s_count = self.dep.num_sbs();
        let mut assoc: Vec<(usize, usize, Option<usize>)> = Vec::with_capacity(trace.num_requests());
        let mut load = vec![0usize; s_count];
        for (u, f) in trace.requests() {
            let s = self.coverage.nearest_cached(u, f, &self.caches);
            if let Some(s) = s {
                load[s] += 1;
            }
            assoc.push((u, f, s));
        }
        let active: Vec<usize> = match cfg.network.interference {
            InterferenceModel::Active => (0..s_count).filter(|&s| load[s] > 0).collect(),
            InterferenceModel::All => (0..s_count).collect(),
        };
        let mut interferers = Vec::with_capacity(active.len());
        for (u, f, s) in assoc {
            self.epoch_requests += 1;
            let (rate, r) = match s {
                Some(s) => {
                    self.epoch_hits += 1;
                    interferers.clear();
                    interferers.extend(active.iter().copied().filter(|&i| i != s));
                    let bw = if cfg.network.equal_share_bandwidth {
                        self.channel.bandwidth_hz / load[s] as f64
                    } else {
                        self.channel.bandwidth_hz
                    };
                    let rate = rate_unchecked(s, u, &gains, &self.channel, &interferers, bw);
                    let r = caching::reward(f, &self.caches[s], rate, cfg.caching.g_min);
                    self.epoch_reward[s] += r;
                    self.content_reward[s][f] += r;
                    (rate, r)
                }
                None => (0.0, 0.0),
            };
            self.emit(|| Event::Request {
                slot,
                ue: u,
                content: f,
                sbs: s,
                rate,
                reward: r,
            });
        }
        add_slot_demand(&trace, &self.coverage, &mut self.window, &mut self.network_window);
        for (u, f) in trace.requests() {
            for &s in self.coverage.sbs_for(u) {
                self.cumulative[s].counts[f] += 1;
            }
        }
        Ok(())
    }

    fn mu(&self) -> f64 {
        1.0 / self.cfg.content.content_size_bits
    }

    fn close_epoch(&mut self) {
        let mu = self.mu();
        let epoch = self.record.epochs.len() as u64;
        let utility: Vec<f64> = self
            .epoch_reward
            .iter()
            .zip(&self.epsilon)
            .map(|(r, e)| e * mu * r)
            .collect();
        for s in 0..utility.len() {
            self.record.per_sbs_utility[s] += utility[s];
            let (eps, u) = (self.epsilon[s], utility[s]);
            self.emit(|| Event::Epoch {
                epoch,
                sbs: s,
                epsilon: eps,
                utility: u,
            });
        }
        self.record.epochs.push(EpochMetrics {
            epoch,
            utility,
            epsilon: self.epsilon.clone(),
            requests: self.epoch_requests,
            hits: self.epoch_hits,
        });
        self.record.requests += self.epoch_requests;
        self.record.hits += self.epoch_hits;
        self.epoch_requests = 0;
        self.epoch_hits = 0;
    }

    fn reset_epoch(&mut self) {
        self.epoch_reward.iter_mut().for_each(|r| *r = 0.0);
        self.content_reward
            .iter_mut()
            .for_each(|v| v.iter_mut().for_each(|r| *r = 0.0));
    }

    fn learn(&mut self) -> Result<()> {
        let mu = self.mu();
        let feedback = self.cfg.learning.feedback;
        let cloud = self.cloud.as_mut().expect("learning scheme has a cloud");
        let mut reports = Vec::with_capacity(self.agents.len());
        for (s, agent) in self.agents.iter_mut().enumerate() {
            let scale = self.epsilon[s] * mu;
            let cache = &self.caches[s];
            let rewards = &self.content_reward[s];
            let (local, global, realized) = match feedback {
                Feedback::Inserted => {
                    let Some(f) = agent.played else {
                        reports.push(None);
                        continue;
                    };
                    let (a, g) = (agent.partition.class_of(f), cloud.partition.class_of(f));
                    let u = class_utility(cache, &agent.partition, a, rewards, scale);
                    let ug = class_utility(cache, &cloud.partition, g, rewards, scale);
                    (vec![(a, u)], vec![(g, ug)], u)
                }
                Feedback::Cache => {
                    if cache.is_empty() {
                        reports.push(None);
                        continue;
                    }
                    let total: f64 = cache.contents().iter().map(|&f| rewards[f]).sum();
                    (
                        slot_utilities(cache, &agent.partition, rewards, scale),
                        slot_utilities(cache, &cloud.partition, rewards, scale),
                        scale * total / cache.len() as f64,
                    )
                }
            };
            if let Some(d) = self.diag.as_deref_mut() {
                d.trajectories[s].record(&agent.learner, local[0].0, realized);
            }
            agent.learner = learner_step_joint(&agent.learner, &local, realized, &self.schedule)?;
            reports.push(Some(CloudReport {
                sbs: s,
                plays: global,
                realized,
            }));
        }
        if let Some(d) = self.diag.as_deref_mut() {
            let first = reports.iter().flatten().next();
            if let Some(r) = first {
                let total: f64 = reports.iter().flatten().map(|r| r.realized).sum();
                d.cloud_trajectory.record(&cloud.learner, r.plays[0].0, total);
            }
        }
        cloud.learner = cloud_learner_step(&reports, &cloud.learner, &self.schedule)?;
        Ok(())
    }

    fn recluster(&mut self, slot: u64) -> Result<()> {
        let cfg = self.cfg;
        let params = cfg.clustering.params(cfg.content.num_contents);
        let alpha = cfg.alpha();
        let network: Vec<f64> = self.network_window.counts.iter().map(|&c| c as f64).collect();
        let rng = &mut self.rngs[R_CLUSTER];
        let global = cluster_demand(&network, cfg.clustering.sigma_l, &params, rng)?;
        for (s, agent) in self.agents.iter_mut().enumerate() {
            let part = if alpha == 1.0 {
                global.clone()
            } else {
                let mixed: Vec<f64> = mix_demand(&self.window[s], &self.network_window, alpha)?;
                cluster_demand(&mixed, cfg.clustering.sigma_l, &params, rng)?
            };
            agent.learner = remap_learner(&agent.learner, &agent.partition, &part)?;
            agent.partition = part;
            if let Some(d) = self.diag.as_deref_mut() {
                d.events.push(Event::Recluster {
                    slot,
                    sbs: s,
                    num_classes: agent.partition.num_classes(),
                });
                d.partitions.push((slot, Some(s), agent.partition.clone()));
            }
        }
        let cloud = self.cloud.as_mut().expect("learning scheme has a cloud");
        cloud.learner = remap_learner(&cloud.learner, &cloud.partition, &global)?;
        cloud.partition = global;
        if let Some(d) = self.diag.as_deref_mut() {
            d.partitions.push((slot, None, cloud.partition.clone()));
        }
        self.record.clustering_slots.push(slot);
        Ok(())
    }

    fn update_caches(&mut self, slot: u64) -> Result<()> {
        let cfg = self.cfg;
        let evict = cfg.caching.evict_count;
        for s in 0..self.caches.len() {
            let outcome = match self.scheme {
                Scheme::Proposed | Scheme::ProposedNoClustering => {
                    let cloud = self.cloud.as_ref().expect("learning scheme has a cloud");
                    let agent = &mut self.agents[s];
                    let pi_c = map_policy(&cloud.learner.policy, &cloud.partition, &agent.partition)?;
                    let mixed = mixed_policy(&agent.learner.policy, &pi_c, cfg.caching.beta)?;
                    for (f, m) in agent.mass.iter_mut().enumerate() {
                        let k = agent.partition.class_of(f);
                        *m += mixed[k] / agent.partition.class_size(k) as f64;
                    }
                    let cache = &mut self.caches[s];
                    for f in cache.contents().to_vec() {
                        cache.set_tally(f, agent.mass[f]);
                    }
                    cache_update(cache, &mixed, &agent.partition, evict, &self.fronthaul, &mut self.rngs[R_POLICY])
                }
                Scheme::B1 => random_replacement(&self.caches[s], evict, &self.fronthaul, &mut self.rngs[R_POLICY]),
                Scheme::B2 => time_average_update(&self.caches[s], &self.cumulative[s].counts, &self.fronthaul),
            };
            match outcome {
                Ok(CacheUpdate {
                    mut cache,
                    evicted,
                    inserted,
                    fetched,
                    cost,
                }) => {
                    if let Some(agent) = self.agents.get_mut(s) {
                        for &f in &inserted {
                            cache.set_tally(f, agent.mass[f]);
                        }
                        agent.played = inserted.first().copied();
                    }
                    self.caches[s] = cache;
                    self.epsilon[s] = cost.epsilon;
                    self.emit(|| Event::CacheUpdate {
                        slot,
                        sbs: s,
                        evicted,
                        inserted,
                        fetched,
                        epsilon: Some(cost.epsilon),
                    });
                }
                Err(Error::InfeasibleUpdate { tau_slots, epoch_slots }) => {
                    log::warn!(
                        "sbs {s} slot {slot}: update needs {tau_slots:.2} slots of a {epoch_slots}-slot epoch; deferred"
                    );
                    self.record.infeasible_updates += 1;
                    self.epsilon[s] = 1.0;
                    if let Some(agent) = self.agents.get_mut(s) {
                        agent.played = None;
                    }
                    self.emit(|| Event::CacheUpdate {
                        slot,
                        sbs: s,
                        evicted: Vec::new(),
                        inserted: Vec::new(),
                        fetched: 0,
                        epsilon: None,
                    });
                }
                Err(e) => return Err(e),
            }
            if let Some(d) = self.diag.as_deref_mut() {
                let epoch = slot / cfg.sim.t2;
                self.caches[s].write_snapshot_csv(epoch, s, &mut d.cache_snapshots)?;
            }
        }
        self.record.update_slots.push(slot);
        Ok(())
    }

    fn finish(mut self) -> MetricsRecord {
        let slots = self.cfg.sim.slots_total as f64;
        let r = &mut self.record;
        r.per_sbs_utility.iter_mut().for_each(|u| *u /= slots);
        r.mean_utility = r.per_sbs_utility.iter().sum::<f64>() / r.per_sbs_utility.len() as f64;
        r.no_requests = r.requests == 0;
        r.hit_rate = if r.no_requests {
            0.0
        } else {
            r.hits as f64 / r.requests as f64
        };
        let eps: Vec<f64> = r.epochs.iter().flat_map(|e| e.epsilon.iter().copied()).collect();
        r.mean_epsilon = if eps.is_empty() {
            1.0
        } else {
            eps.iter().sum::<f64>() / eps.len() as f64
        };
        r.trace_digest = self.digest.hex();
        self.record
    }
}

/// Runs one replication of `cfg.sim.scheme`.
pub fn run_replication(cfg: &SimConfig, seed: u64) -> Result<MetricsRecord> {
    Replication::new(cfg, seed, None)?.run()
}

/// Same as [`run_replication`], also collecting the event log and dumps.
pub fn run_replication_with(cfg: &SimConfig, seed: u64, diag: &mut Diagnostics) -> Result<MetricsRecord> {
    Replication::new(cfg, seed, Some(diag))?.run()
}

/// Runs `cfg` under another scheme.
pub fn with_scheme(cfg: &SimConfig, scheme: Scheme) -> SimConfig {
    let mut c = cfg.clone();
    c.sim.scheme = scheme;
    c
}
