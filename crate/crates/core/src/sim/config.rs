use serde::{Deserialize, Serialize};

use crate::caching::FronthaulModel;
use crate::clustering::ClusterParams;
use crate::content::DEFAULT_CONTENT_SIZE_BITS;
use crate::learning::LearningSchedule;
use crate::net::ChannelParams;
use crate::{Error, Result};

/// Caching scheme driven by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Clustering plus local/cloud regret learning.
    Proposed,
    /// Same learners with every content in its own class.
    ProposedNoClustering,
    /// Random caching.
    B1,
    /// Time-average content popularity caching.
    B2,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Proposed,
        Scheme::ProposedNoClustering,
        Scheme::B1,
        Scheme::B2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::ProposedNoClustering => "proposed-no-clustering",
            Scheme::B1 => "b1",
            Scheme::B2 => "b2",
        }
    }

    pub fn is_learning(self) -> bool {
        matches!(self, Scheme::Proposed | Scheme::ProposedNoClustering)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scheme `{s}` (expected one of proposed, proposed-no-clustering, b1, b2)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterferenceModel {
    /// Only SBSs serving someone in the slot interfere.
    Active,
    /// Every other SBS interferes.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub lambda_sbs: f64,
    pub lambda_ue: f64,
    pub area_side: f64,
    pub coverage_radius: f64,
    pub tx_power_dbm: f64,
    /// Watts; `None` uses the thermal floor over the band.
    pub noise_variance: Option<f64>,
    pub pathloss_exponent: f64,
    pub bandwidth_hz: f64,
    pub interference: InterferenceModel,
    /// Split ω evenly among the users an SBS serves in a slot.
    pub equal_share_bandwidth: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let ch = ChannelParams::default();
        NetworkConfig {
            lambda_sbs: 1.6e-4,
            lambda_ue: 1.6e-4,
            area_side: 500.0,
            coverage_radius: 200.0,
            tx_power_dbm: ch.tx_power_dbm,
            noise_variance: None,
            pathloss_exponent: ch.pathloss_exponent,
            bandwidth_hz: ch.bandwidth_hz,
            interference: InterferenceModel::Active,
            equal_share_bandwidth: false,
        }
    }
}

impl NetworkConfig {
    pub fn lambda_ratio(&self) -> f64 {
        self.lambda_sbs / self.lambda_ue
    }

    pub fn channel(&self) -> ChannelParams<f64> {
        let noise = self.noise_variance.unwrap_or_else(|| {
            let dbm = -174.0 + 10.0 * self.bandwidth_hz.log10();
            10f64.powf((dbm - 30.0) / 10.0)
        });
        ChannelParams {
            tx_power_dbm: self.tx_power_dbm,
            noise_variance: noise,
            pathloss_exponent: self.pathloss_exponent,
            bandwidth_hz: self.bandwidth_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContentConfig {
    pub num_contents: usize,
    /// Ground-truth popularity classes.
    pub num_classes: usize,
    pub zipf_exponent: f64,
    pub content_size_bits: f64,
    pub request_prob: f64,
    /// Mixing weight of one popularity random-walk step.
    pub drift: f64,
    /// Slots between random-walk steps.
    pub drift_period: u64,
    pub local_skew: f64,
    pub tilt_concentration: f64,
}

impl Default for ContentConfig {
    fn default() -> Self {
        ContentConfig {
            num_contents: 500,
            num_classes: 10,
            zipf_exponent: 1.0,
            content_size_bits: DEFAULT_CONTENT_SIZE_BITS,
            request_prob: 0.5,
            drift: 2e-3,
            drift_period: 1,
            local_skew: 0.5,
            tilt_concentration: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    /// Local/global demand weight; `None` ties it to `caching.beta`.
    pub alpha: Option<f64>,
    /// Kernel width; `None` uses the median heuristic.
    pub sigma_l: Option<f64>,
    pub k_min: usize,
    pub k_max: usize,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        let p = ClusterParams::default();
        ClusteringConfig {
            alpha: None,
            sigma_l: None,
            k_min: p.k_min,
            k_max: p.k_max,
            kmeans_restarts: p.kmeans_restarts,
            kmeans_max_iter: p.kmeans_max_iter,
        }
    }
}

impl ClusteringConfig {
    /// Bounds clipped to the library size.
    pub fn params(&self, num_contents: usize) -> ClusterParams {
        let k_max = self.k_max.min(num_contents).max(1);
        ClusterParams {
            k_min: self.k_min.min(k_max),
            k_max,
            kmeans_restarts: self.kmeans_restarts,
            kmeans_max_iter: self.kmeans_max_iter,
        }
    }
}

/// Which actions an SBS is credited with at an epoch boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feedback {
    /// Only the class of the content inserted at the previous update.
    Inserted,
    /// Every class occupying a cache slot, each with its per-slot utility.
    Cache,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningConfig {
    pub xi_s: f64,
    pub xi_c: f64,
    pub exponents: [f64; 3],
    pub feedback: Feedback,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            xi_s: 0.01,
            xi_c: 0.0002,
            exponents: LearningSchedule::default().exponents,
            feedback: Feedback::Cache,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CachingConfig {
    /// Cache size `d`.
    pub capacity: usize,
    pub beta: f64,
    /// `C_f`, bits/s.
    pub fronthaul_capacity: f64,
    /// `l_p`.
    pub overhead_const: f64,
    pub evict_count: usize,
    /// QoS threshold on the served rate, bits/s.
    pub g_min: f64,
}

impl Default for CachingConfig {
    fn default() -> Self {
        CachingConfig {
            capacity: 50,
            beta: 0.0,
            fronthaul_capacity: 50e9,
            overhead_const: 1.0,
            evict_count: 1,
            g_min: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Re-clustering period `T₁`, slots.
    pub t1: u64,
    /// Cache-update period `T₂`, slots.
    pub t2: u64,
    pub slots_total: u64,
    pub slot_seconds: f64,
    pub scheme: Scheme,
    pub seeds: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            t1: 500,
            t2: 50,
            slots_total: 5000,
            slot_seconds: 1.0,
            scheme: Scheme::Proposed,
            seeds: (1..=20).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub network: NetworkConfig,
    pub content: ContentConfig,
    pub clustering: ClusteringConfig,
    pub learning: LearningConfig,
    pub caching: CachingConfig,
    pub sim: RunConfig,
}

fn require(ok: bool, msg: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg.into()))
    }
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl SimConfig {
    /// Effective `α`.
    pub fn alpha(&self) -> f64 {
        self.clustering.alpha.unwrap_or(self.caching.beta)
    }

    pub fn schedule(&self) -> Result<LearningSchedule<f64>> {
        LearningSchedule::new(self.learning.exponents)
    }

    pub fn fronthaul(&self, num_sbs: usize) -> Result<FronthaulModel<f64>> {
        FronthaulModel::equal_split(
            self.caching.fronthaul_capacity,
            num_sbs,
            self.caching.overhead_const,
            self.sim.t2,
            self.content.content_size_bits,
            self.sim.slot_seconds,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let (n, c, cl, l, ca, s) = (
            &self.network,
            &self.content,
            &self.clustering,
            &self.learning,
            &self.caching,
            &self.sim,
        );
        require(n.lambda_sbs > 0.0, "network.lambda_sbs must be positive")?;
        require(n.lambda_ue > 0.0, "network.lambda_ue must be positive")?;
        require(n.area_side > 0.0, "network.area_side must be positive")?;
        require(n.coverage_radius > 0.0, "network.coverage_radius must be positive")?;
        require(n.noise_variance.is_none_or(|x| x > 0.0), "network.noise_variance must be positive")?;
        self.network
            .channel()
            .validate()
            .map_err(|e| Error::Config(format!("network: {e}")))?;

        require(c.num_contents >= 1, "content.num_contents must be at least 1")?;
        require(
            c.num_classes >= 1 && c.num_classes <= c.num_contents,
            "content.num_classes must be between 1 and num_contents",
        )?;
        require(c.zipf_exponent >= 0.0, "content.zipf_exponent must be nonnegative")?;
        require(c.content_size_bits > 0.0, "content.content_size_bits must be positive")?;
        require(unit(c.request_prob), "content.request_prob must be in [0, 1]")?;
        require(unit(c.drift), "content.drift must be in [0, 1]")?;
        require(c.drift_period >= 1, "content.drift_period must be at least 1")?;
        require(unit(c.local_skew), "content.local_skew must be in [0, 1]")?;
        require(c.tilt_concentration > 0.0, "content.tilt_concentration must be positive")?;

        require(cl.alpha.is_none_or(unit), "clustering.alpha must be in [0, 1]")?;
        require(cl.sigma_l.is_none_or(|x| x > 0.0), "clustering.sigma_l must be positive")?;
        require(
            cl.k_min >= 1 && cl.k_min <= cl.k_max,
            "clustering.k_min must be at least 1 and at most k_max",
        )?;
        require(
            cl.kmeans_restarts >= 1 && cl.kmeans_max_iter >= 1,
            "clustering.kmeans_restarts and kmeans_max_iter must be positive",
        )?;

        require(l.xi_s > 0.0, "learning.xi_s must be positive")?;
        require(l.xi_c > 0.0, "learning.xi_c must be positive")?;
        self.schedule()
            .map_err(|_| Error::Config("learning.exponents must satisfy 0.5 < e1 < e2 < e3 <= 1".into()))?;

        require(
            ca.capacity >= 1 && ca.capacity <= c.num_contents,
            "caching.capacity must be between 1 and num_contents",
        )?;
        require(unit(ca.beta), "caching.beta must be in [0, 1]")?;
        require(ca.fronthaul_capacity > 0.0, "caching.fronthaul_capacity must be positive")?;
        require(ca.overhead_const > 0.0, "caching.overhead_const must be positive")?;
        require(ca.evict_count <= ca.capacity, "caching.evict_count must not exceed capacity")?;
        require(ca.g_min >= 0.0, "caching.g_min must be nonnegative")?;

        require(s.t2 >= 1, "T2 must be at least 1")?;
        require(s.t1 > s.t2, "T1 must exceed T2")?;
        require(s.slots_total >= s.t1, "slots_total must be at least T1")?;
        require(s.slot_seconds > 0.0, "sim.slot_seconds must be positive")?;
        Ok(())
    }
}
