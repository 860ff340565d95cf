//! Cartesian points, spherical coordinates, and the per-beam sensor model.
//!
//! A spinning multi-beam LiDAR does not fire all lasers from a common
//! origin: beam `j` sits at mounting height `h_j` and a fixed pitch.
//! Conversions here therefore come in two flavours, the shared-origin one
//! and the beam-relative one.

use crate::error::{Error, Result};

/// A LiDAR return: position in meters plus reflectance in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Self { x, y, z, intensity }
    }

    /// Planar (xy) distance from the sensor axis.
    pub fn planar_range(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Euclidean norm of the position.
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// An unordered set of returns; order is only meaningful for file round trips.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Rotate every point about the z axis by `angle` radians.
    pub fn rotated_z(&self, angle: f64) -> PointCloud {
        let (s, c) = angle.sin_cos();
        let points = self
            .points
            .iter()
            .map(|p| Point3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z, p.intensity))
            .collect();
        PointCloud::new(points)
    }
}

/// Spherical coordinates: range in meters, azimuth in `(-pi, pi]`,
/// elevation (pitch) in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCoord {
    pub range: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

/// One laser of the sensor: mounting height (m) and pitch (rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beam {
    pub height: f64,
    pub pitch: f64,
}

/// Per-laser calibration, sorted by pitch descending (top beam = row 0).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamModel {
    pub beams: Vec<Beam>,
}

impl BeamModel {
    /// Build a model from `(height, pitch)` pairs, sorting by pitch descending.
    pub fn new(mut beams: Vec<Beam>) -> Result<Self> {
        if beams.is_empty() {
            return Err(Error::DegenerateConfig("beam model needs >= 1 beam".into()));
        }
        if beams
            .iter()
            .any(|b| !b.height.is_finite() || !b.pitch.is_finite())
        {
            return Err(Error::DegenerateConfig("non-finite beam parameters".into()));
        }
        beams.sort_by(|a, b| b.pitch.partial_cmp(&a.pitch).unwrap());
        for pair in beams.windows(2) {
            if pair[0].pitch == pair[1].pitch {
                return Err(Error::DuplicatePitch {
                    pitch: pair[0].pitch,
                });
            }
        }
        Ok(Self { beams })
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    /// Keep every `factor`-th beam starting from row 0.
    pub fn subsampled(&self, factor: usize) -> Result<BeamModel> {
        if factor == 0 || !self.beams.len().is_multiple_of(factor) {
            return Err(Error::NonDivisorFactor {
                value: self.beams.len(),
                factor,
            });
        }
        Ok(BeamModel {
            beams: self.beams.iter().copied().step_by(factor).collect(),
        })
    }
}

/// Azimuth in `(-pi, pi]`; the open end is enforced by mapping `-pi` to `pi`,
/// and `atan2(0, 0) = 0` settles the pole.
fn azimuth(y: f64, x: f64) -> f64 {
    let theta = y.atan2(x);
    if theta == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        theta
    }
}

/// Shared-origin spherical coordinates of a point.
pub fn cart_to_spherical(p: &Point3) -> SphericalCoord {
    SphericalCoord {
        range: p.norm(),
        azimuth: azimuth(p.y, p.x),
        elevation: (p.z).atan2(p.planar_range()),
    }
}

/// Beam-relative spherical coordinates: range is measured from the beam's
/// own origin at height `h_j`, and the elevation is the beam's nominal
/// pitch rather than anything computed from `z`.
pub fn cart_to_beam_spherical(
    p: &Point3,
    beam_index: usize,
    model: &BeamModel,
) -> Result<SphericalCoord> {
    let beam = model
        .beams
        .get(beam_index)
        .ok_or(Error::BeamIndexOutOfRange {
            index: beam_index,
            count: model.beams.len(),
        })?;
    let dz = p.z - beam.height;
    Ok(SphericalCoord {
        range: (p.x * p.x + p.y * p.y + dz * dz).sqrt(),
        azimuth: azimuth(p.y, p.x),
        elevation: beam.pitch,
    })
}

/// Inverse of the beam-relative conversion for a beam at `height`.
/// Intensity is left at zero; callers carry it separately.
pub fn beam_spherical_to_cart(s: &SphericalCoord, height: f64) -> Point3 {
    let (sin_e, cos_e) = s.elevation.sin_cos();
    let (sin_a, cos_a) = s.azimuth.sin_cos();
    Point3::new(
        s.range * cos_e * cos_a,
        s.range * cos_e * sin_a,
        s.range * sin_e + height,
        0.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn spherical_axis_aligned() {
        let s = cart_to_spherical(&Point3::new(1.0, 0.0, 0.0, 0.0));
        assert_eq!((s.range, s.azimuth, s.elevation), (1.0, 0.0, 0.0));

        let s = cart_to_spherical(&Point3::new(0.0, 1.0, 0.0, 0.0));
        assert_eq!(s.range, 1.0);
        assert!((s.azimuth - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(s.elevation, 0.0);
    }

    #[test]
    fn spherical_pole_convention() {
        let s = cart_to_spherical(&Point3::new(0.0, 0.0, 1.0, 0.0));
        assert_eq!(s.range, 1.0);
        assert_eq!(s.azimuth, 0.0);
        assert!((s.elevation - FRAC_PI_2).abs() < 1e-15);

        let origin = cart_to_spherical(&Point3::new(0.0, 0.0, 0.0, 0.0));
        assert_eq!((origin.range, origin.azimuth, origin.elevation), (0.0, 0.0, 0.0));
    }

    #[test]
    fn azimuth_stays_in_half_open_range() {
        let s = cart_to_spherical(&Point3::new(-1.0, 0.0, 0.0, 0.0));
        assert_eq!(s.azimuth, PI);
        let s = cart_to_spherical(&Point3::new(-1.0, -0.0, 0.0, 0.0));
        assert_eq!(s.azimuth, PI);
    }

    fn model(beams: &[(f64, f64)]) -> BeamModel {
        BeamModel::new(
            beams
                .iter()
                .map(|&(height, pitch)| Beam { height, pitch })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn beam_spherical_345_triangle() {
        let m = model(&[(0.2, 0.0)]);
        let s = cart_to_beam_spherical(&Point3::new(3.0, 4.0, 0.2, 0.0), 0, &m).unwrap();
        assert!((s.range - 5.0).abs() < 1e-15);
        assert!((s.azimuth - 4.0f64.atan2(3.0)).abs() < 1e-15);
        assert_eq!(s.elevation, 0.0);
    }

    #[test]
    fn beam_spherical_unit_and_45_degree() {
        let m = model(&[(0.0, 0.0)]);
        let s = cart_to_beam_spherical(&Point3::new(1.0, 0.0, 0.0, 0.0), 0, &m).unwrap();
        assert_eq!((s.range, s.azimuth, s.elevation), (1.0, 0.0, 0.0));

        let h = 0.3;
        let m = model(&[(h, FRAC_PI_4)]);
        let s = cart_to_beam_spherical(&Point3::new(1.0, 0.0, 1.0 + h, 0.0), 0, &m).unwrap();
        assert!((s.range - 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.elevation, FRAC_PI_4);
    }

    #[test]
    fn beam_index_out_of_range() {
        let m = model(&[(0.0, 0.0)]);
        let err = cart_to_beam_spherical(&Point3::new(1.0, 0.0, 0.0, 0.0), 1, &m).unwrap_err();
        assert!(matches!(err, Error::BeamIndexOutOfRange { index: 1, count: 1 }));
    }

    #[test]
    fn inverse_of_345_example() {
        let s = SphericalCoord {
            range: 5.0,
            azimuth: 4.0f64.atan2(3.0),
            elevation: 0.0,
        };
        let p = beam_spherical_to_cart(&s, 0.2);
        assert!((p.x - 3.0).abs() < 1e-14);
        assert!((p.y - 4.0).abs() < 1e-14);
        assert!((p.z - 0.2).abs() < 1e-14);
    }

    #[test]
    fn inverse_zero_range_lands_on_beam_origin() {
        let s = SphericalCoord {
            range: 0.0,
            azimuth: 0.0,
            elevation: 0.0,
        };
        let p = beam_spherical_to_cart(&s, 1.0);
        assert_eq!((p.x, p.y, p.z), (0.0, 0.0, 1.0));
    }

    #[test]
    fn random_round_trip_under_1e9() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let m = model(&[(0.12, 0.05), (-0.08, -0.3), (0.3, -0.01), (0.0, 0.4)]);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let j = rng.random_range(0..m.len());
            let s = SphericalCoord {
                range: rng.random_range(1.0..80.0),
                azimuth: rng.random_range(-PI..PI),
                elevation: m.beams[j].pitch,
            };
            let p = beam_spherical_to_cart(&s, m.beams[j].height);
            let back = cart_to_beam_spherical(&p, j, &m).unwrap();
            worst = worst
                .max((back.range - s.range).abs())
                .max((back.azimuth - s.azimuth).abs())
                .max((back.elevation - s.elevation).abs());
        }
        assert!(worst < 1e-9, "worst round-trip error {worst}");
    }

    #[test]
    fn duplicate_pitch_rejected() {
        let err = BeamModel::new(vec![
            Beam { height: 0.0, pitch: 0.1 },
            Beam { height: 0.1, pitch: 0.1 },
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DuplicatePitch { .. }));
    }

    #[test]
    fn model_sorts_by_pitch_descending() {
        let m = model(&[(0.0, -0.2), (0.1, 0.3), (0.2, 0.0)]);
        let pitches: Vec<f64> = m.beams.iter().map(|b| b.pitch).collect();
        assert_eq!(pitches, vec![0.3, 0.0, -0.2]);
    }

    proptest! {
        #[test]
        fn range_matches_euclidean_norm(
            x in -100.0f64..100.0,
            y in -100.0f64..100.0,
            z in -100.0f64..100.0,
        ) {
            let p = Point3::new(x, y, z, 0.0);
            let s = cart_to_spherical(&p);
            let norm = (x * x + y * y + z * z).sqrt();
            prop_assert!((s.range - norm).abs() <= 1e-12 * norm.max(1.0));
        }

        #[test]
        fn yaw_rotation_shifts_azimuth(
            x in 0.5f64..50.0,
            y in -50.0f64..50.0,
            z in -5.0f64..5.0,
            delta in -3.0f64..3.0,
        ) {
            let p = Point3::new(x, y, z, 0.0);
            let q = PointCloud::new(vec![p]).rotated_z(delta).points[0];
            let (sp, sq) = (cart_to_spherical(&p), cart_to_spherical(&q));
            let mut diff = sq.azimuth - sp.azimuth - delta;
            diff -= (diff / std::f64::consts::TAU).round() * std::f64::consts::TAU;
            prop_assert!(diff.abs() < 1e-9);
            prop_assert!((sq.range - sp.range).abs() < 1e-9 * sp.range.max(1.0));

            // Same shift under the beam-relative conversion.
            let m = BeamModel::new(vec![Beam { height: 0.2, pitch: -0.1 }]).unwrap();
            let (bp, bq) = (
                cart_to_beam_spherical(&p, 0, &m).unwrap(),
                cart_to_beam_spherical(&q, 0, &m).unwrap(),
            );
            let mut bdiff = bq.azimuth - bp.azimuth - delta;
            bdiff -= (bdiff / std::f64::consts::TAU).round() * std::f64::consts::TAU;
            prop_assert!(bdiff.abs() < 1e-9);
            prop_assert!((bq.range - bp.range).abs() < 1e-9 * bp.range.max(1.0));
        }

        #[test]
        fn beam_round_trip(
            range in 0.5f64..120.0,
            az in -3.1f64..3.1,
            pitch in -0.5f64..0.2,
            height in -0.4f64..0.4,
        ) {
            let m = BeamModel::new(vec![Beam { height, pitch }]).unwrap();
            let s = SphericalCoord { range, azimuth: az, elevation: pitch };
            let p = beam_spherical_to_cart(&s, height);
            let back = cart_to_beam_spherical(&p, 0, &m).unwrap();
            prop_assert!((back.range - range).abs() < 1e-9);
            prop_assert!((back.azimuth - az).abs() < 1e-9);
        }
    }
}
