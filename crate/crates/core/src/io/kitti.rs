//! KITTI-style point-cloud binaries: consecutive little-endian float32
//! records of `(x, y, z, intensity)`, optionally padded to a longer record
//! (nuScenes uses 5 floats; the extra fields are ignored on read).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

/// Read 4-float records.
pub fn read_point_cloud(path: &Path) -> Result<PointCloud> {
    read_point_cloud_stride(path, 4)
}

/// Read records of `stride >= 4` floats, taking the first four of each as
/// `(x, y, z, intensity)`. Intensity is clamped to `[0, 1]`; non-finite
/// coordinates are an error naming the record index.
pub fn read_point_cloud_stride(path: &Path, stride: usize) -> Result<PointCloud> {
    if stride < 4 {
        return Err(Error::DegenerateConfig(format!(
            "record stride must be >= 4 floats, got {stride}"
        )));
    }
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let record = stride * 4;
    if bytes.len() % record != 0 {
        return Err(Error::BadFileSize {
            path: path.to_path_buf(),
            size: bytes.len() as u64,
            record: record as u64,
        });
    }
    let mut points = Vec::with_capacity(bytes.len() / record);
    for (index, chunk) in bytes.chunks_exact(record).enumerate() {
        let f = |i: usize| -> f64 {
            f32::from_le_bytes(chunk[i * 4..i * 4 + 4].try_into().unwrap()) as f64
        };
        let (x, y, z, intensity) = (f(0), f(1), f(2), f(3));
        if !x.is_finite() || !y.is_finite() || !z.is_finite() || !intensity.is_finite() {
            return Err(Error::NonFiniteRecord {
                path: path.to_path_buf(),
                index,
            });
        }
        points.push(Point3::new(x, y, z, intensity.clamp(0.0, 1.0)));
    }
    Ok(PointCloud::new(points))
}

/// Write 4-float records.
pub fn write_point_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut bytes = Vec::with_capacity(cloud.len() * 16);
    for p in &cloud.points {
        for v in [p.x, p.y, p.z, p.intensity] {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
