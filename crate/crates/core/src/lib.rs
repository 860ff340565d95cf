//! Range-view LiDAR toolkit.
//!
//! The pieces, bottom up:
//!
//! - [`geometry`]: Cartesian/spherical conversions and the per-beam sensor
//!   model (each laser has its own mounting height and pitch).
//! - [`calibration`]: Hough-voting estimation of that beam model from raw
//!   point clouds.
//! - [`projection`]: exact point-cloud to range-image rasterization, its
//!   inverse, and range-value normalization.
//! - [`rangeops`]: circular padding/convolution and the meta-kernel
//!   operator over relative spherical offsets.
//! - [`diffusion`]: noise schedules, the closed-form forward process,
//!   denoising-loss estimators, ancestral and implicit (DDIM) sampling over
//!   a pluggable denoiser.
//! - [`losses`]: reconstruction / KL / hinge-adversarial calculators.
//! - [`metrics`]: BEV-histogram JSD and MMD, Chamfer distance, range MAE,
//!   and the Fréchet distance over external feature files.
//! - [`tasks`]: beam subsampling, sector masking, direction conditioning,
//!   and condition reshaping for conditional generation.
//! - [`io`]: file codecs; [`cli`]: the command-line surface.

pub mod calibration;
pub mod cli;
pub mod diffusion;
pub mod error;
pub mod geometry;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod projection;
pub mod rangeops;
pub mod synthetic;
pub mod tasks;

pub use error::{Error, Result};
