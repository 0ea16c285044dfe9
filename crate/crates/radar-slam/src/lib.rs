//! FMCW radar SLAM toolkit.
//!
//! The library is organised around the stages of a scanning-radar SLAM
//! pipeline: polar/Cartesian radar geometry, SE(2) kinematics, blob feature
//! detection and KLT tracking, graph-based outlier rejection, a
//! motion-compensated pose/velocity estimator, keyframing and mapping, loop
//! closure on radar point clouds, pose-graph optimization, a synthetic radar
//! simulator and a KITTI-style evaluation harness. The [`pipeline`] module
//! ties everything together for the `odometry` and `slam` entry points.

pub mod config;
pub mod estimator;
pub mod eval;
pub mod features;
pub mod geometry;
pub mod graph_opt;
pub mod loop_closure;
pub mod map;
pub mod outliers;
pub mod pipeline;
pub mod se2;
pub mod sim;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
