//! Fixed-magic binary containers.
//!
//! Layout: 4-byte ASCII magic, then little-endian u32 extents, then the
//! row-major payload. Per magic:
//!
//! | magic  | extents                        | payload                      |
//! |--------|--------------------------------|------------------------------|
//! | `RGIM` | H, W, C (= 2)                  | f32, channel-interleaved     |
//! | `FEAT` | n, D                           | f32                          |
//! | `MASK` | H, W                           | u8 in {0, 1}                 |
//! | `MKWT` | c_mid, c_in, k, c_out          | six f32 arrays (see below)   |
//!
//! `MKWT` arrays in order: offset-hidden weights (c_mid x 3) and bias,
//! offset-out weights (c_in x c_mid) and bias, combine weights
//! (c_out x k*c_in) and bias.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::FeatureMatrix;
use crate::projection::RangeImage;
use crate::rangeops::{DenseLayer, FeatureMap, MetaKernelWeights};
use crate::tasks::BinaryGrid;

const RANGE_IMAGE_MAGIC: [u8; 4] = *b"RGIM";
const FEATURES_MAGIC: [u8; 4] = *b"FEAT";
const MASK_MAGIC: [u8; 4] = *b"MASK";
const META_KERNEL_MAGIC: [u8; 4] = *b"MKWT";

struct Reader<'a> {
    path: &'a Path,
    bytes: Vec<u8>,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn open(path: &'a Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self {
            path,
            bytes,
            pos: 0,
        })
    }

    fn expect_magic(&mut self, expected: [u8; 4]) -> Result<()> {
        if self.bytes.len() < 4 {
            return Err(Error::PayloadLength {
                path: self.path.to_path_buf(),
                expected: 4,
                actual: self.bytes.len() as u64,
            });
        }
        let actual: [u8; 4] = self.bytes[0..4].try_into().unwrap();
        if actual != expected {
            return Err(Error::BadMagic {
                path: self.path.to_path_buf(),
                expected,
                actual,
            });
        }
        self.pos = 4;
        Ok(())
    }

    fn read_u32s<const N: usize>(&mut self) -> Result<[u32; N]> {
        let need = N * 4;
        if self.bytes.len() < self.pos + need {
            return Err(Error::PayloadLength {
                path: self.path.to_path_buf(),
                expected: (self.pos + need) as u64,
                actual: self.bytes.len() as u64,
            });
        }
        let mut out = [0u32; N];
        for (i, v) in out.iter_mut().enumerate() {
            let at = self.pos + i * 4;
            *v = u32::from_le_bytes(self.bytes[at..at + 4].try_into().unwrap());
        }
        self.pos += need;
        Ok(out)
    }

    /// The remaining bytes must hold exactly `count` values of `width`
    /// bytes each.
    fn check_payload(&self, count: usize, width: usize) -> Result<()> {
        let expected = (self.pos + count * width) as u64;
        if self.bytes.len() as u64 != expected {
            return Err(Error::PayloadLength {
                path: self.path.to_path_buf(),
                expected,
                actual: self.bytes.len() as u64,
            });
        }
        Ok(())
    }

    fn read_f32s(&mut self, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(
                f32::from_le_bytes(self.bytes[self.pos..self.pos + 4].try_into().unwrap()) as f64,
            );
            self.pos += 4;
        }
        out
    }
}

fn write_file(path: &Path, bytes: Vec<u8>) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn push_f32s(bytes: &mut Vec<u8>, values: &[f64]) {
    for &v in values {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

/// Store an H x W x C tensor under the `RGIM` magic (the normalized-image
/// case; raw range images are the C = 2 specialization).
pub fn write_feature_map(path: &Path, fm: &FeatureMap) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + fm.data.len() * 4);
    bytes.extend_from_slice(&RANGE_IMAGE_MAGIC);
    for dim in [fm.height as u32, fm.width as u32, fm.channels as u32] {
        bytes.extend_from_slice(&dim.to_le_bytes());
    }
    push_f32s(&mut bytes, &fm.data);
    write_file(path, bytes)
}

pub fn read_feature_map(path: &Path) -> Result<FeatureMap> {
    let mut r = Reader::open(path)?;
    r.expect_magic(RANGE_IMAGE_MAGIC)?;
    let [h, w, c] = r.read_u32s::<3>()?;
    let (h, w, c) = (h as usize, w as usize, c as usize);
    r.check_payload(h * w * c, 4)?;
    Ok(FeatureMap::from_data(h, w, c, r.read_f32s(h * w * c)))
}

pub fn write_range_image(path: &Path, img: &RangeImage) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + img.range.len() * 8);
    bytes.extend_from_slice(&RANGE_IMAGE_MAGIC);
    for dim in [img.height as u32, img.width as u32, 2u32] {
        bytes.extend_from_slice(&dim.to_le_bytes());
    }
    for i in 0..img.range.len() {
        push_f32s(&mut bytes, &[img.range[i], img.intensity[i]]);
    }
    write_file(path, bytes)
}

pub fn read_range_image(path: &Path) -> Result<RangeImage> {
    let mut r = Reader::open(path)?;
    r.expect_magic(RANGE_IMAGE_MAGIC)?;
    let [h, w, c] = r.read_u32s::<3>()?;
    if c != 2 {
        return Err(Error::ChannelMismatch {
            expected: 2,
            actual: c as usize,
        });
    }
    let (h, w) = (h as usize, w as usize);
    r.check_payload(h * w * 2, 4)?;
    let values = r.read_f32s(h * w * 2);
    let mut img = RangeImage::zeros(h, w);
    for i in 0..h * w {
        img.range[i] = values[2 * i];
        img.intensity[i] = values[2 * i + 1];
    }
    Ok(img)
}

pub fn write_features(path: &Path, features: &FeatureMatrix) -> Result<()> {
    let mut bytes = Vec::with_capacity(12 + features.data.len() * 4);
    bytes.extend_from_slice(&FEATURES_MAGIC);
    for dim in [features.rows as u32, features.cols as u32] {
        bytes.extend_from_slice(&dim.to_le_bytes());
    }
    push_f32s(&mut bytes, &features.data);
    write_file(path, bytes)
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let mut r = Reader::open(path)?;
    r.expect_magic(FEATURES_MAGIC)?;
    let [n, d] = r.read_u32s::<2>()?;
    let (n, d) = (n as usize, d as usize);
    r.check_payload(n * d, 4)?;
    Ok(FeatureMatrix::new(n, d, r.read_f32s(n * d)))
}

pub fn write_mask(path: &Path, grid: &BinaryGrid) -> Result<()> {
    let mut bytes = Vec::with_capacity(12 + grid.data.len());
    bytes.extend_from_slice(&MASK_MAGIC);
    for dim in [grid.height as u32, grid.width as u32] {
        bytes.extend_from_slice(&dim.to_le_bytes());
    }
    bytes.extend_from_slice(&grid.data);
    write_file(path, bytes)
}

pub fn read_mask(path: &Path) -> Result<BinaryGrid> {
    let mut r = Reader::open(path)?;
    r.expect_magic(MASK_MAGIC)?;
    let [h, w] = r.read_u32s::<2>()?;
    let (h, w) = (h as usize, w as usize);
    r.check_payload(h * w, 1)?;
    let data = r.bytes[r.pos..].to_vec();
    if let Some(index) = data.iter().position(|&v| v > 1) {
        return Err(Error::InvalidMaskValue {
            path: path.to_path_buf(),
            index,
            value: data[index],
        });
    }
    Ok(BinaryGrid {
        height: h,
        width: w,
        data,
    })
}

pub fn write_meta_kernel_weights(path: &Path, weights: &MetaKernelWeights) -> Result<()> {
    let c_mid = weights.offset_hidden.out_dim;
    let c_in = weights.offset_out.out_dim;
    let c_out = weights.combine.out_dim;
    let k = weights.combine.in_dim / c_in.max(1);
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&META_KERNEL_MAGIC);
    for dim in [c_mid as u32, c_in as u32, k as u32, c_out as u32] {
        bytes.extend_from_slice(&dim.to_le_bytes());
    }
    for layer in [&weights.offset_hidden, &weights.offset_out, &weights.combine] {
        push_f32s(&mut bytes, &layer.weights);
        push_f32s(&mut bytes, &layer.bias);
    }
    write_file(path, bytes)
}

pub fn read_meta_kernel_weights(path: &Path) -> Result<MetaKernelWeights> {
    let mut r = Reader::open(path)?;
    r.expect_magic(META_KERNEL_MAGIC)?;
    let [c_mid, c_in, k, c_out] = r.read_u32s::<4>()?;
    let (c_mid, c_in, k, c_out) = (c_mid as usize, c_in as usize, k as usize, c_out as usize);
    let total = c_mid * 3 + c_mid + c_in * c_mid + c_in + c_out * k * c_in + c_out;
    r.check_payload(total, 4)?;
    let mut layer = |in_dim: usize, out_dim: usize| -> DenseLayer {
        let weights = r.read_f32s(out_dim * in_dim);
        let bias = r.read_f32s(out_dim);
        DenseLayer::new(in_dim, out_dim, weights, bias)
    };
    Ok(MetaKernelWeights {
        offset_hidden: layer(3, c_mid),
        offset_out: layer(c_mid, c_in),
        combine: layer(k * c_in, c_out),
    })
}
