//! Multi-scale stereo matching and 3D reconstruction.
//!
//! The pipeline decomposes a rectified stereo pair into four base layers with
//! an edge-preserving weighted-least-squares filter, builds a fused
//! AD + gradient + census matching cost per layer, aggregates each cost volume
//! with a guided filter, couples the four aggregated volumes through a
//! scale-graph regularizer, extracts a disparity map and triangulates it into
//! a point cloud. Mask evaluation metrics (accuracy, sensitivity, AUC) live in
//! [`metrics`].

pub mod aggregate;
pub mod config;
pub mod cost;
pub mod disparity;
pub mod error;
pub mod fusion;
pub mod image;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod reconstruct;
pub mod synth;
pub mod wls;

pub use error::{Error, Result};
pub use image::{gradient, Axis, CostVolume, DisparityMap, Image, INVALID_DISPARITY};
