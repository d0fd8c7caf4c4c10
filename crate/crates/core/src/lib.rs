//! Reconstruction of crash scenarios from monocular dashcam perception output.
//!
//! The crate turns per-frame perception output into absolute world-frame
//! vehicle trajectories and packages them as simulator-ready scenarios with
//! synchronized lead-in motion. It also contains a CLEAR-MOT evaluator for
//! absolute trajectories and a synthetic scene renderer used to close the
//! loop without real footage.
//!
//! Conventions used throughout:
//! - camera frame: x right, y down, z forward (depth along z);
//! - world frame: origin at the first ego pose, x along the initial ego
//!   heading, y to the left, yaw counter-clockwise from +x;
//! - lane pixels use a bottom-left image origin once ingested.

pub mod camera;
pub mod editor;
pub mod error;
pub mod lanes;
pub mod metrics;
pub mod pipeline;
pub mod scenario;
pub mod synth;
pub mod tracking;
pub mod trajectory;

pub use error::{Error, Result};
