//! Covariate adjustment in causal graphs.
//!
//! Structural work (ancestry, separation, Meek's rules, adjustment criteria,
//! projections) lives in [`graph`], [`separation`], [`meek`] and
//! [`adjustment`]. Linear models and estimation live in [`scm`], [`ida`] and
//! [`varselect`]; [`sim`] reproduces the optimal versus local IDA
//! comparison. [`io`] and [`fixtures`] hold the text formats and the worked
//! example graphs.

pub mod adjustment;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod ida;
pub mod io;
pub mod meek;
pub mod rng;
pub mod scalar;
pub mod scm;
pub mod separation;
pub mod sim;
pub mod varselect;

pub use error::{Error, Result};
pub use graph::{Edge, EdgeKind, Graph, GraphBuilder, GraphClass, NodeId, NodeSet, Path, Step};

pub use scalar::Scalar;

pub type LinearScm64 = scm::LinearScm<f64>;
pub type LinearScm32 = scm::LinearScm<f32>;
pub type Dataset64 = scm::Dataset<f64>;
pub type Dataset32 = scm::Dataset<f32>;
pub type Covariance64 = scm::Covariance<f64>;
