//! Reconstructs mixer activity graphs from transaction data, decomposes them
//! into dense communities, characterizes each community by topological
//! features, clusters communities to surface recurring structural patterns,
//! and profiles the role of labeled entities inside each pattern.
//!
//! The crate is organized as a pipeline of independent modules:
//!
//! * [`ingest`] — file parsing into validated in-memory stores
//! * [`graph`] — transaction indexing and activity-graph construction
//! * [`export`] — GraphML / DOT serialization
//! * [`community`] — weighted Louvain with the address-boundary repair
//! * [`features`] — topological feature vectors and standardization
//! * [`clustering`] — OPTICS (with DBSCAN extraction), HDBSCAN, agreement
//! * [`patterns`] — canonical signatures, pass-through detection, entity profiles
//! * [`synth`] — deterministic synthetic corpora with ground truth
//! * [`pipeline`] — end-to-end orchestration and artifact emission
//!
//! All floating-point analytics are generic over [`Scalar`]; concrete
//! aliases for the common instantiations live at the crate root.

pub mod clustering;
pub mod community;
pub mod export;
pub mod features;
pub mod graph;
pub mod ingest;
pub mod patterns;
pub mod pipeline;
pub mod synth;

use std::fmt::{Debug, Display};

/// Floating-point scalar for the analytics core (f32 or f64).
///
/// Amounts stay exact `u64` satoshis everywhere; this trait only covers the
/// derived quantities (modularity, centralities, distances, z-scores).
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + num_traits::NumAssign
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from a satoshi amount.
    fn from_sat(amount: u64) -> Self {
        Self::from_u64(amount).expect("satoshi amount representable")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Feature vector with `f64` analytics, the pipeline default.
pub type FeatureVector64 = features::FeatureVector<f64>;
/// Feature vector with `f32` analytics.
pub type FeatureVector32 = features::FeatureVector<f32>;
/// `f64` partition as returned by Louvain.
pub type Partition64 = community::Partition<f64>;
/// `f64` OPTICS reachability plot.
pub type ReachabilityPlot64 = clustering::ReachabilityPlot<f64>;
