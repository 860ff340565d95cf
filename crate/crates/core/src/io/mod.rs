//! File formats: KITTI-style point-cloud binaries, the fixed-magic binary
//! containers for range images / masks / feature matrices / meta-kernel
//! weights, and the plain-text beam model.
//!
//! Everything is little-endian. Readers validate magic, dimensions, and
//! exact payload length, and report offending record indices rather than
//! skipping data.

mod beams;
mod container;
mod kitti;

pub use beams::{read_beam_model, write_beam_model};
pub use container::{
    read_feature_map, read_features, read_mask, read_meta_kernel_weights, read_range_image,
    write_feature_map, write_features, write_mask, write_meta_kernel_weights, write_range_image,
};
pub use kitti::{read_point_cloud, read_point_cloud_stride, write_point_cloud};
