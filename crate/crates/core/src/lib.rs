//! Synthetic indoor LiDAR datasets and 3D detection benchmarking.
//!
//! The crate procedurally generates furnished rooms ([`scene`]), casts a
//! spinning LiDAR's beams through them ([`sensor`]), extracts exact ground-truth
//! boxes ([`annotate`]), writes KITTI-layout datasets ([`storage`]), rasterises
//! bird's-eye-view grids ([`bev`]) and scores detections ([`eval`]).

pub mod annotate;
pub mod bev;
pub mod cli;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod pipeline;
pub mod rng;
pub mod scene;
pub mod sensor;
pub mod storage;

pub use error::{Error, LabelError, LabelErrorKind, Result};
