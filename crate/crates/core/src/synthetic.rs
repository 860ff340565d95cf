//! Synthetic sensor scenes with known ground truth, for tests, demos, and
//! benchmarks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::{beam_spherical_to_cart, Beam, BeamModel, PointCloud, SphericalCoord};

/// Descending pitch ladder from `top` to `bottom` inclusive, in radians.
pub fn pitch_ladder(n: usize, top: f64, bottom: f64) -> Vec<f64> {
    assert!(n >= 1);
    if n == 1 {
        return vec![top];
    }
    (0..n)
        .map(|j| top + (bottom - top) * j as f64 / (n - 1) as f64)
        .collect()
}

/// Deterministic height pattern filling `[-amplitude, amplitude]`.
pub fn height_pattern(n: usize, amplitude: f64) -> Vec<f64> {
    (0..n).map(|j| amplitude * (2.39996 * j as f64).sin()).collect()
}

/// Beam model with a descending pitch ladder and the given heights.
pub fn ladder_model(pitches: &[f64], heights: &[f64]) -> BeamModel {
    assert_eq!(pitches.len(), heights.len());
    BeamModel::new(
        pitches
            .iter()
            .zip(heights)
            .map(|(&pitch, &height)| Beam { height, pitch })
            .collect(),
    )
    .expect("synthetic ladder must be valid")
}

/// Sample `points_per_beam` returns per beam: azimuth uniform over the full
/// circle, range uniform in `[r_min, r_max]` plus Gaussian range noise of
/// `noise_sigma` meters (applied along the ray, so the beam pitch is exact).
/// Returns the cloud and the true beam index of every point.
pub fn sample_cloud<R: Rng>(
    model: &BeamModel,
    points_per_beam: usize,
    r_min: f64,
    r_max: f64,
    noise_sigma: f64,
    rng: &mut R,
) -> (PointCloud, Vec<usize>) {
    let mut points = Vec::with_capacity(model.len() * points_per_beam);
    let mut labels = Vec::with_capacity(points.capacity());
    for (j, beam) in model.beams.iter().enumerate() {
        for _ in 0..points_per_beam {
            let noise: f64 = rng.sample(StandardNormal);
            let s = SphericalCoord {
                range: rng.random_range(r_min..r_max) + noise_sigma * noise,
                azimuth: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                elevation: beam.pitch,
            };
            let mut p = beam_spherical_to_cart(&s, beam.height);
            p.intensity = rng.random_range(0.0..1.0);
            points.push(p);
            labels.push(j);
        }
    }
    (PointCloud::new(points), labels)
}

/// At most one return per range-image pixel, each at its pixel-center
/// azimuth, so projection and unprojection are exact inverses up to
/// floating-point rounding. `fill` is the per-pixel occupancy probability.
pub fn pixel_centered_cloud<R: Rng>(
    model: &BeamModel,
    width: usize,
    fill: f64,
    r_min: f64,
    r_max: f64,
    rng: &mut R,
) -> PointCloud {
    let mut points = Vec::new();
    for beam in &model.beams {
        for u in 0..width {
            if rng.random_range(0.0..1.0) >= fill {
                continue;
            }
            let azimuth =
                (u as f64 + 0.5) / width as f64 * std::f64::consts::TAU - std::f64::consts::PI;
            let s = SphericalCoord {
                range: rng.random_range(r_min..r_max),
                azimuth,
                elevation: beam.pitch,
            };
            let mut p = beam_spherical_to_cart(&s, beam.height);
            p.intensity = rng.random_range(0.0..1.0);
            points.push(p);
        }
    }
    PointCloud::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn ladder_is_descending() {
        let pitches = pitch_ladder(5, 0.05, -0.4);
        assert_eq!(pitches.len(), 5);
        assert!(pitches.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(pitches[0], 0.05);
        assert_eq!(pitches[4], -0.4);
    }

    #[test]
    fn sample_cloud_labels_match_count() {
        let model = ladder_model(&pitch_ladder(4, 0.0, -0.3), &height_pattern(4, 0.2));
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let (cloud, labels) = sample_cloud(&model, 10, 5.0, 60.0, 0.0, &mut rng);
        assert_eq!(cloud.len(), 40);
        assert_eq!(labels.len(), 40);
        assert!(labels.iter().all(|&j| j < 4));
    }

    #[test]
    fn pixel_centered_cloud_is_sparse() {
        let model = ladder_model(&pitch_ladder(2, 0.0, -0.1), &[0.0, 0.1]);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        let cloud = pixel_centered_cloud(&model, 64, 0.5, 2.0, 50.0, &mut rng);
        assert!(cloud.len() <= 128);
        assert!(!cloud.is_empty());
    }
}
