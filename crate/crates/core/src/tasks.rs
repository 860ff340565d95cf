//! Data preparation for conditional generation: beam subsampling for
//! upsampling tasks, sector masking for inpainting, the direction
//! condition, and the lossless reshaping that aligns a sparse range image
//! with a downsampled latent grid.

use crate::error::{Error, Result};
use crate::projection::{column_azimuth, RangeImage};
use crate::rangeops::FeatureMap;

/// Dense binary grid, row-major; values are 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryGrid {
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
}

impl BinaryGrid {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0; height * width],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.data[row * self.width + col] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }
}

/// Inpainting mask (1 = missing) over one contiguous circular band of
/// columns, identical in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorMask {
    pub grid: BinaryGrid,
    pub center_deg: f64,
    pub width_deg: f64,
}

/// Keep rows `0, factor, 2*factor, ...`; `factor` must divide the height.
pub fn subsample_beams(img: &RangeImage, factor: usize) -> Result<RangeImage> {
    if factor == 0 || !img.height.is_multiple_of(factor) {
        return Err(Error::NonDivisorFactor {
            value: img.height,
            factor,
        });
    }
    let mut out = RangeImage::zeros(img.height / factor, img.width);
    for (out_row, in_row) in (0..img.height).step_by(factor).enumerate() {
        for col in 0..img.width {
            out.set_pixel(
                out_row,
                col,
                img.range_at(in_row, col),
                img.intensity_at(in_row, col),
            );
        }
    }
    Ok(out)
}

/// Zero every column whose pixel-center azimuth lies within
/// `width_deg / 2` of `center_deg` (circularly); returns the masked image
/// and the mask (1 = masked).
pub fn mask_sector(
    img: &RangeImage,
    center_deg: f64,
    width_deg: f64,
) -> Result<(RangeImage, SectorMask)> {
    if !width_deg.is_finite() || width_deg <= 0.0 || width_deg > 360.0 {
        return Err(Error::DegenerateConfig(format!(
            "sector width must be in (0, 360] degrees, got {width_deg}"
        )));
    }
    let mut masked = img.clone();
    let mut grid = BinaryGrid::zeros(img.height, img.width);
    for col in 0..img.width {
        let az_deg = column_azimuth(col, img.width).to_degrees();
        let mut delta = (az_deg - center_deg).rem_euclid(360.0);
        if delta > 180.0 {
            delta = 360.0 - delta;
        }
        if delta <= width_deg / 2.0 {
            for row in 0..img.height {
                masked.set_pixel(row, col, 0.0, 0.0);
                grid.set(row, col, 1);
            }
        }
    }
    Ok((
        masked,
        SectorMask {
            grid,
            center_deg,
            width_deg,
        },
    ))
}

/// Direction condition: ones in column 0 (the x-axis column), zeros
/// elsewhere.
pub fn direction_condition(height: usize, width: usize) -> BinaryGrid {
    assert!(height >= 1 && width >= 1);
    let mut grid = BinaryGrid::zeros(height, width);
    for row in 0..height {
        grid.set(row, 0, 1);
    }
    grid
}

/// Losslessly fold groups of `factor` columns into channels:
/// `out[row, col, c * factor + k] = in[row, col * factor + k, c]`.
pub fn reshape_condition(sparse: &FeatureMap, factor: usize) -> Result<FeatureMap> {
    if factor == 0 || !sparse.width.is_multiple_of(factor) {
        return Err(Error::NonDivisorFactor {
            value: sparse.width,
            factor,
        });
    }
    let mut out = FeatureMap::zeros(
        sparse.height,
        sparse.width / factor,
        sparse.channels * factor,
    );
    for row in 0..sparse.height {
        for col in 0..out.width {
            for ch in 0..sparse.channels {
                for k in 0..factor {
                    out.set(
                        row,
                        col,
                        ch * factor + k,
                        sparse.get(row, col * factor + k, ch),
                    );
                }
            }
        }
    }
    Ok(out)
}

/// Exact inverse of [`reshape_condition`].
pub fn reshape_condition_inverse(folded: &FeatureMap, factor: usize) -> Result<FeatureMap> {
    if factor == 0 || !folded.channels.is_multiple_of(factor) {
        return Err(Error::NonDivisorFactor {
            value: folded.channels,
            factor,
        });
    }
    let channels = folded.channels / factor;
    let mut out = FeatureMap::zeros(folded.height, folded.width * factor, channels);
    for row in 0..folded.height {
        for col in 0..folded.width {
            for ch in 0..channels {
                for k in 0..factor {
                    out.set(
                        row,
                        col * factor + k,
                        ch,
                        folded.get(row, col, ch * factor + k),
                    );
                }
            }
        }
    }
    Ok(out)
}

/// Max-pool a binary grid by `factor` in both axes: an output cell is 1
/// iff any covered input cell is 1.
pub fn downsample_mask(mask: &BinaryGrid, factor: usize) -> Result<BinaryGrid> {
    if factor == 0 || !mask.height.is_multiple_of(factor) || !mask.width.is_multiple_of(factor) {
        return Err(Error::NonDivisorFactor {
            value: if factor != 0 && mask.height.is_multiple_of(factor) {
                mask.width
            } else {
                mask.height
            },
            factor,
        });
    }
    let mut out = BinaryGrid::zeros(mask.height / factor, mask.width / factor);
    for row in 0..mask.height {
        for col in 0..mask.width {
            if mask.get(row, col) != 0 {
                out.set(row / factor, col / factor, 1);
            }
        }
    }
    Ok(out)
}
