//! Cluster-based cooperative edge caching: stochastic-geometry network model,
//! multi-class content popularity, spectral content clustering, regret-based
//! caching policies and a slot-level simulator.

pub mod caching;
pub mod clustering;
pub mod content;
mod error;
pub mod learning;
pub mod linalg;
pub mod net;
mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision aliases used by the simulator.
pub type Gains = net::GainMatrix<f64>;
pub type Channel = net::ChannelParams<f64>;
pub type Cache = caching::CacheState<f64>;
pub type Fronthaul = caching::FronthaulModel<f64>;
pub type Learner = learning::LearnerState<f64>;
pub type Schedule = learning::LearningSchedule<f64>;
pub type Similarity = clustering::SimilarityMatrix<f64>;

/// Single-precision variants.
pub type LearnerF32 = learning::LearnerState<f32>;
pub type CacheF32 = caching::CacheState<f32>;
pub type SimilarityF32 = clustering::SimilarityMatrix<f32>;
