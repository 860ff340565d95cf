//! Per-beam height and pitch estimation by Hough voting.
//!
//! Each return at planar distance `d` and height `z` is consistent with any
//! beam origin height `h`, pitching at `atan2(z - h, d)`: a curve through
//! `(h, phi)` parameter space. Summing those curves over a cloud piles votes
//! onto the true `(h_j, phi_j)` of every laser; peak extraction with
//! non-maximum suppression then reads the beam model off the accumulator.

use crate::error::{Error, Result};
use crate::geometry::{Beam, BeamModel, Point3, PointCloud};

/// Hough grid and peak-extraction parameters.
///
/// The default grid targets HDL-64-class sensors: heights within half a
/// meter of the sensor origin at 2.5 mm resolution, pitches in
/// `[-30 deg, +10 deg]` at 0.02 deg resolution. Returns closer than
/// `min_planar_range` are skipped; near-field geometry is dominated by the
/// vehicle itself and its curve through `(h, phi)` space is steepest.
#[derive(Debug, Clone)]
pub struct HoughConfig {
    pub h_min: f64,
    pub h_max: f64,
    pub h_bins: usize,
    pub phi_min: f64,
    pub phi_max: f64,
    pub phi_bins: usize,
    pub num_beams: usize,
    /// Non-maximum suppression radius, in cells.
    pub suppression_radius: usize,
    pub min_planar_range: f64,
}

impl Default for HoughConfig {
    fn default() -> Self {
        Self {
            h_min: -0.5,
            h_max: 0.5,
            h_bins: 401,
            phi_min: (-30.0f64).to_radians(),
            phi_max: 10.0f64.to_radians(),
            phi_bins: 2000,
            num_beams: 64,
            suppression_radius: 3,
            min_planar_range: 2.0,
        }
    }
}

impl HoughConfig {
    fn validate(&self) -> Result<()> {
        let finite = [self.h_min, self.h_max, self.phi_min, self.phi_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.h_min >= self.h_max || self.phi_min >= self.phi_max {
            return Err(Error::DegenerateConfig(
                "grid bounds must be finite with min < max".into(),
            ));
        }
        if self.h_bins < 2 || self.phi_bins < 2 {
            return Err(Error::DegenerateConfig("need >= 2 bins per axis".into()));
        }
        if self.num_beams < 1 {
            return Err(Error::DegenerateConfig("need >= 1 beam".into()));
        }
        Ok(())
    }

    fn h_width(&self) -> f64 {
        (self.h_max - self.h_min) / self.h_bins as f64
    }

    fn phi_width(&self) -> f64 {
        (self.phi_max - self.phi_min) / self.phi_bins as f64
    }

    /// Center of height bin `k`.
    pub fn h_center(&self, k: usize) -> f64 {
        self.h_min + (k as f64 + 0.5) * self.h_width()
    }

    /// Center of pitch bin `k`.
    pub fn phi_center(&self, k: usize) -> f64 {
        self.phi_min + (k as f64 + 0.5) * self.phi_width()
    }

    /// Bin index for a pitch inside `[phi_min, phi_max)`, `None` outside.
    pub fn phi_bin(&self, phi: f64) -> Option<usize> {
        if phi < self.phi_min || phi >= self.phi_max {
            return None;
        }
        let k = ((phi - self.phi_min) / self.phi_width()) as usize;
        Some(k.min(self.phi_bins - 1))
    }
}

/// Vote grid over `(h, phi)` cells, row-major with `phi` fastest.
#[derive(Debug, Clone)]
pub struct HoughAccumulator {
    pub config: HoughConfig,
    votes: Vec<u64>,
}

impl HoughAccumulator {
    pub fn new(config: HoughConfig) -> Result<Self> {
        config.validate()?;
        let votes = vec![0u64; config.h_bins * config.phi_bins];
        Ok(Self { config, votes })
    }

    #[inline]
    fn idx(&self, h_bin: usize, phi_bin: usize) -> usize {
        h_bin * self.config.phi_bins + phi_bin
    }

    pub fn votes_at(&self, h_bin: usize, phi_bin: usize) -> u64 {
        self.votes[self.idx(h_bin, phi_bin)]
    }

    pub fn total_votes(&self) -> u64 {
        self.votes.iter().sum()
    }

    /// Elementwise sum; merging is associative and commutative, so clouds
    /// (or point partitions) may be accumulated in any order.
    pub fn merge(&mut self, other: &HoughAccumulator) -> Result<()> {
        if self.votes.len() != other.votes.len() {
            return Err(Error::DimensionMismatch {
                left: self.votes.len(),
                right: other.votes.len(),
            });
        }
        for (a, b) in self.votes.iter_mut().zip(&other.votes) {
            *a += b;
        }
        Ok(())
    }

    fn add_cloud(&mut self, cloud: &PointCloud) {
        let cfg = &self.config;
        for p in &cloud.points {
            let d = p.planar_range();
            if !d.is_finite() || d <= cfg.min_planar_range || !p.z.is_finite() {
                continue;
            }
            for k in 0..cfg.h_bins {
                let phi = (p.z - cfg.h_center(k)).atan2(d);
                if let Some(pb) = cfg.phi_bin(phi) {
                    self.votes[k * cfg.phi_bins + pb] += 1;
                }
            }
        }
    }
}

/// Trace every point's `(h, phi)` curve into a fresh accumulator: one vote
/// per height bin, in the pitch bin containing `atan2(z - h_c, d)`.
pub fn accumulate_votes(cloud: &PointCloud, config: &HoughConfig) -> Result<HoughAccumulator> {
    if cloud.is_empty() {
        return Err(Error::EmptyPointCloud);
    }
    let mut acc = HoughAccumulator::new(config.clone())?;
    acc.add_cloud(cloud);
    Ok(acc)
}

/// Pull `n` peaks out of the accumulator by iterative maximum selection.
///
/// After each pick the `(2r+1)^2` neighborhood is zeroed (non-maximum
/// suppression) and the peak is refined to the vote-weighted centroid of
/// that neighborhood. Vote ties break toward the lower `(h, phi)` cell
/// index. The result is sorted by pitch descending; duplicate pitches are
/// an error.
pub fn extract_beams(acc: &HoughAccumulator, n: usize) -> Result<BeamModel> {
    if n < 1 {
        return Err(Error::DegenerateConfig("need >= 1 peak".into()));
    }
    let cfg = &acc.config;
    let mut votes = acc.votes.clone();
    let r = cfg.suppression_radius as isize;
    let mut beams = Vec::with_capacity(n);

    for found in 0..n {
        let mut best = 0u64;
        let mut best_cell = (0usize, 0usize);
        for hb in 0..cfg.h_bins {
            for pb in 0..cfg.phi_bins {
                let v = votes[hb * cfg.phi_bins + pb];
                if v > best {
                    best = v;
                    best_cell = (hb, pb);
                }
            }
        }
        if best == 0 {
            return Err(Error::InsufficientPeaks {
                requested: n,
                found,
            });
        }

        // Vote-weighted centroid over the suppression neighborhood, then
        // zero it out.
        let (hb, pb) = best_cell;
        let mut mass = 0.0;
        let mut h_sum = 0.0;
        let mut phi_sum = 0.0;
        for dh in -r..=r {
            for dp in -r..=r {
                let (h_i, p_i) = (hb as isize + dh, pb as isize + dp);
                if h_i < 0 || p_i < 0 || h_i >= cfg.h_bins as isize || p_i >= cfg.phi_bins as isize
                {
                    continue;
                }
                let (h_i, p_i) = (h_i as usize, p_i as usize);
                let v = votes[h_i * cfg.phi_bins + p_i] as f64;
                mass += v;
                h_sum += v * cfg.h_center(h_i);
                phi_sum += v * cfg.phi_center(p_i);
                votes[h_i * cfg.phi_bins + p_i] = 0;
            }
        }
        beams.push(Beam {
            height: h_sum / mass,
            pitch: phi_sum / mass,
        });
    }

    BeamModel::new(beams)
}

/// Beam whose cone passes closest (in elevation) to the point; ties break
/// to the smaller index.
pub fn assign_beam(p: &Point3, model: &BeamModel) -> Result<usize> {
    if model.is_empty() {
        return Err(Error::DegenerateConfig("empty beam model".into()));
    }
    let d = p.planar_range();
    if d == 0.0 {
        return Err(Error::UndefinedElevation);
    }
    let mut best = 0usize;
    let mut best_err = f64::INFINITY;
    for (j, beam) in model.beams.iter().enumerate() {
        let err = ((p.z - beam.height).atan2(d) - beam.pitch).abs();
        if err < best_err {
            best_err = err;
            best = j;
        }
    }
    Ok(best)
}

/// Vote over every cloud, then extract `config.num_beams` peaks.
pub fn calibrate(clouds: &[PointCloud], config: &HoughConfig) -> Result<BeamModel> {
    let (first, rest) = clouds.split_first().ok_or(Error::EmptyPointCloud)?;
    let mut acc = accumulate_votes(first, config)?;
    for cloud in rest {
        if cloud.is_empty() {
            return Err(Error::EmptyPointCloud);
        }
        acc.add_cloud(cloud);
    }
    extract_beams(&acc, config.num_beams)
}
