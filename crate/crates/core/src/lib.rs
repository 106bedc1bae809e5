#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
//! Compass-based multi-agent agreement: supporting hyperrectangles and their tangent cones,
//! switching signed interaction graphs, a switched-system simulator with a cone-condition
//! validator, and agreement metrics.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the aliases below fix
//! the common choices.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod metrics;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Hyperrectangle64 = geometry::Hyperrectangle<f64>;
pub type Hyperrectangle32 = geometry::Hyperrectangle<f32>;
pub type ConeQuery64 = geometry::ConeQuery<f64>;
pub type ConeQuery32 = geometry::ConeQuery<f32>;
pub type SwitchingSignal64 = graph::SwitchingSignal<f64>;
pub type SwitchingSignal32 = graph::SwitchingSignal<f32>;
pub type ProtocolSpec64 = dynamics::ProtocolSpec<f64>;
pub type ProtocolSpec32 = dynamics::ProtocolSpec<f32>;
pub type Trajectory64 = dynamics::Trajectory<f64>;
pub type Trajectory32 = dynamics::Trajectory<f32>;
pub type VicsekState64 = dynamics::VicsekState<f64>;
pub type VicsekState32 = dynamics::VicsekState<f32>;
