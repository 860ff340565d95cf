//! Geometry-aware range-image operators.
//!
//! Range images wrap horizontally (column 0 neighbors column W-1), so
//! padding and convolution here treat the width axis as circular. The
//! meta-kernel operator goes one step further and modulates each neighbor's
//! features by a learned function of the relative spherical offset between
//! neighbor and center, making the filter sensitive to local 3D structure.
//! Everything is inference-only: weights are supplied, never trained here.

use crate::error::{Error, Result};
use crate::geometry::SphericalCoord;

/// Dense H x W x C grid of features, row-major with channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn from_data(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), height * width * channels);
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize, ch: usize) -> usize {
        (row * self.width + col) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[self.idx(row, col, ch)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, value: f64) {
        let i = self.idx(row, col, ch);
        self.data[i] = value;
    }

    /// Columns rotated right by `k` (circularly), as under a yaw rotation of
    /// the underlying scene.
    pub fn shifted_columns(&self, k: usize) -> FeatureMap {
        let mut out = FeatureMap::zeros(self.height, self.width, self.channels);
        for row in 0..self.height {
            for col in 0..self.width {
                let src = (col + self.width - k % self.width) % self.width;
                for ch in 0..self.channels {
                    out.set(row, col, ch, self.get(row, src, ch));
                }
            }
        }
        out
    }

    /// Drop `kx` columns from each side and `ky` rows from top and bottom.
    pub fn crop_border(&self, kx: usize, ky: usize) -> FeatureMap {
        assert!(2 * kx <= self.width && 2 * ky <= self.height);
        let mut out = FeatureMap::zeros(self.height - 2 * ky, self.width - 2 * kx, self.channels);
        for row in 0..out.height {
            for col in 0..out.width {
                for ch in 0..self.channels {
                    out.set(row, col, ch, self.get(row + ky, col + kx, ch));
                }
            }
        }
        out
    }
}

/// Pad `kx` columns on each side by wrapping horizontally and `ky` rows of
/// zeros on top and bottom.
pub fn circular_pad(fm: &FeatureMap, kx: usize, ky: usize) -> FeatureMap {
    let mut out = FeatureMap::zeros(fm.height + 2 * ky, fm.width + 2 * kx, fm.channels);
    for row in 0..fm.height {
        for col in 0..out.width {
            let src = (col + 2 * fm.width - (kx % fm.width)) % fm.width;
            for ch in 0..fm.channels {
                out.set(row + ky, col, ch, fm.get(row, src, ch));
            }
        }
    }
    out
}

/// Convolution kernel of shape C_out x C_in x kh x kw.
#[derive(Debug, Clone)]
pub struct ConvKernel {
    pub c_out: usize,
    pub c_in: usize,
    pub kh: usize,
    pub kw: usize,
    pub data: Vec<f64>,
}

impl ConvKernel {
    pub fn from_data(c_out: usize, c_in: usize, kh: usize, kw: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), c_out * c_in * kh * kw);
        Self {
            c_out,
            c_in,
            kh,
            kw,
            data,
        }
    }

    /// Mean filter over a kh x kw window, channel-preserving.
    pub fn averaging(channels: usize, kh: usize, kw: usize) -> Self {
        let mut data = vec![0.0; channels * channels * kh * kw];
        let w = 1.0 / (kh * kw) as f64;
        for c in 0..channels {
            for ky in 0..kh {
                for kx in 0..kw {
                    data[((c * channels + c) * kh + ky) * kw + kx] = w;
                }
            }
        }
        Self {
            c_out: channels,
            c_in: channels,
            kh,
            kw,
            data,
        }
    }

    #[inline]
    fn at(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.data[((o * self.c_in + i) * self.kh + ky) * self.kw + kx]
    }
}

/// Cross-correlation with circular horizontal padding. With
/// `vertical_zero_pad` the output keeps the input height (rows beyond the
/// image read as zero); without it only vertically-valid positions are
/// produced, so the output has `H - kh + 1` rows.
pub fn circular_conv2d(
    fm: &FeatureMap,
    kernel: &ConvKernel,
    vertical_zero_pad: bool,
) -> Result<FeatureMap> {
    if kernel.kh.is_multiple_of(2) || kernel.kw.is_multiple_of(2) {
        return Err(Error::EvenKernel {
            height: kernel.kh,
            width: kernel.kw,
        });
    }
    if kernel.c_in != fm.channels {
        return Err(Error::ChannelMismatch {
            expected: kernel.c_in,
            actual: fm.channels,
        });
    }
    let rh = (kernel.kh / 2) as isize;
    let rw = (kernel.kw / 2) as isize;
    let out_height = if vertical_zero_pad {
        fm.height
    } else {
        if kernel.kh > fm.height {
            return Err(Error::KernelTallerThanImage {
                kernel: kernel.kh,
                rows: fm.height,
            });
        }
        fm.height - kernel.kh + 1
    };
    let row_offset = if vertical_zero_pad { 0 } else { rh };

    let mut out = FeatureMap::zeros(out_height, fm.width, kernel.c_out);
    for row in 0..out_height {
        let center_row = row as isize + row_offset;
        for col in 0..fm.width {
            for o in 0..kernel.c_out {
                let mut acc = 0.0;
                for ky in 0..kernel.kh {
                    let src_row = center_row + ky as isize - rh;
                    if src_row < 0 || src_row >= fm.height as isize {
                        continue;
                    }
                    for kx in 0..kernel.kw {
                        let src_col = (col as isize + kx as isize - rw)
                            .rem_euclid(fm.width as isize)
                            as usize;
                        for i in 0..kernel.c_in {
                            acc += kernel.at(o, i, ky, kx)
                                * fm.get(src_row as usize, src_col, i);
                        }
                    }
                }
                out.set(row, col, o, acc);
            }
        }
    }
    Ok(out)
}

/// Displacement of `pj` in the local frame that puts `pi` on the x-axis at
/// its own range, treating the frame change as a pure shift of azimuth and
/// elevation. The norm equals the Euclidean distance between the two
/// frame-embedded points.
pub fn relative_spherical_offset(pj: &SphericalCoord, pi: &SphericalCoord) -> [f64; 3] {
    let da = pj.azimuth - pi.azimuth;
    let de = pj.elevation - pi.elevation;
    let (sin_de, cos_de) = de.sin_cos();
    let (sin_da, cos_da) = da.sin_cos();
    [
        pj.range * cos_de * cos_da - pi.range,
        pj.range * cos_de * sin_da,
        pj.range * sin_de,
    ]
}

/// One dense layer: `out = W x + b` with `W` stored row-major (out x in).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(in_dim: usize, out_dim: usize, weights: Vec<f64>, bias: Vec<f64>) -> Self {
        assert_eq!(weights.len(), in_dim * out_dim);
        assert_eq!(bias.len(), out_dim);
        Self {
            in_dim,
            out_dim,
            weights,
            bias,
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_dim);
        debug_assert_eq!(out.len(), self.out_dim);
        for (o, y) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            *y = self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

/// Weights of the meta-kernel: a two-layer MLP (ReLU between the layers,
/// none after) mapping the 3-vector offset to a per-channel modulation, and
/// a combine layer applied to the K concatenated neighbor features.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaKernelWeights {
    pub offset_hidden: DenseLayer,
    pub offset_out: DenseLayer,
    pub combine: DenseLayer,
}

impl MetaKernelWeights {
    fn validate(&self, c_in: usize, neighborhood: usize) -> Result<()> {
        let chain = [
            (self.offset_hidden.in_dim, 3),
            (self.offset_out.in_dim, self.offset_hidden.out_dim),
            (self.offset_out.out_dim, c_in),
            (self.combine.in_dim, neighborhood * c_in),
        ];
        for (actual, expected) in chain {
            if actual != expected {
                return Err(Error::DimensionMismatch {
                    left: actual,
                    right: expected,
                });
            }
        }
        Ok(())
    }
}

/// Apply the meta-kernel over a kh x kw neighborhood.
///
/// For each center pixel, every neighbor's feature vector is modulated
/// elementwise by the offset MLP of its relative spherical offset, the K
/// modulated vectors are concatenated in row-major window order, and the
/// combine layer produces the output channels. Horizontal neighbor lookup
/// wraps; rows beyond the image and neighbors with no return (range 0)
/// contribute zeros while keeping their concatenation slot.
pub fn meta_kernel_apply(
    fm: &FeatureMap,
    coords: &[SphericalCoord],
    weights: &MetaKernelWeights,
    kh: usize,
    kw: usize,
) -> Result<FeatureMap> {
    if kh.is_multiple_of(2) || kw.is_multiple_of(2) {
        return Err(Error::EvenKernel {
            height: kh,
            width: kw,
        });
    }
    if coords.len() != fm.height * fm.width {
        return Err(Error::DimensionMismatch {
            left: coords.len(),
            right: fm.height * fm.width,
        });
    }
    weights.validate(fm.channels, kh * kw)?;

    let c_in = fm.channels;
    let (rh, rw) = ((kh / 2) as isize, (kw / 2) as isize);
    let mut out = FeatureMap::zeros(fm.height, fm.width, weights.combine.out_dim);
    let mut hidden = vec![0.0; weights.offset_hidden.out_dim];
    let mut modulation = vec![0.0; c_in];
    let mut gathered = vec![0.0; kh * kw * c_in];
    let mut result = vec![0.0; weights.combine.out_dim];

    for row in 0..fm.height {
        for col in 0..fm.width {
            let center = &coords[row * fm.width + col];
            gathered.iter_mut().for_each(|v| *v = 0.0);
            let mut slot = 0;
            for dy in -rh..=rh {
                for dx in -rw..=rw {
                    let src_row = row as isize + dy;
                    let dst = &mut gathered[slot * c_in..(slot + 1) * c_in];
                    slot += 1;
                    if src_row < 0 || src_row >= fm.height as isize {
                        continue;
                    }
                    let src_row = src_row as usize;
                    let src_col =
                        (col as isize + dx).rem_euclid(fm.width as isize) as usize;
                    let neighbor = &coords[src_row * fm.width + src_col];
                    if neighbor.range == 0.0 {
                        continue;
                    }
                    let gamma = relative_spherical_offset(neighbor, center);
                    weights.offset_hidden.apply(&gamma, &mut hidden);
                    hidden.iter_mut().for_each(|v| *v = v.max(0.0));
                    weights.offset_out.apply(&hidden, &mut modulation);
                    for ch in 0..c_in {
                        dst[ch] = modulation[ch] * fm.get(src_row, src_col, ch);
                    }
                }
            }
            weights.combine.apply(&gathered, &mut result);
            for (ch, &v) in result.iter().enumerate() {
                out.set(row, col, ch, v);
            }
        }
    }
    Ok(out)
}
