//! Multi-layer Stixel ground truth from LiDAR, with the heat-map codec,
//! training losses and evaluation metrics that go with it.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the bottom of this file name the common `f64` instantiations.

// `!(x > 0)` is the NaN-rejecting form used by config validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// small fixed-size matrix loops read better with explicit indices
#![allow(clippy::needless_range_loop)]

pub mod agt;
pub mod cluster;
pub mod codec;
pub mod geometry;
pub mod ground;
mod hull;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod scalar;
pub mod synth;
pub mod types;

pub use scalar::Real;
pub use types::{
    Calibration, CameraIntrinsics, Extrinsics, Frame, Grid, GridSpec, HeatmapPair, InvariantError, Plane, Point3,
    PointCloud, Stixel, StixelType, StixelWorld, TargetGrid,
};

pub type Point3f64 = Point3<f64>;
pub type Point3f32 = Point3<f32>;
pub type Cloud64 = PointCloud<f64>;
pub type Cloud32 = PointCloud<f32>;
pub type Calibration64 = Calibration<f64>;
pub type Plane64 = Plane<f64>;
pub type Stixel64 = Stixel<f64>;
pub type World64 = StixelWorld<f64>;
pub type World32 = StixelWorld<f32>;
pub type Heatmaps64 = HeatmapPair<f64>;
pub type Heatmaps32 = HeatmapPair<f32>;
pub type AgtConfig64 = agt::AgtConfig<f64>;
pub type SceneSpec64 = synth::SceneSpec<f64>;
