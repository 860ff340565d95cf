//! Point-cloud to range-image rasterization and its inverse.
//!
//! Rows are laser beams (pitch descending, top beam first), columns are
//! azimuth with the full circle mapped to `[0, W)` and wrap-around at the
//! seam. A pixel stores range and intensity; range 0 means no return.

use crate::calibration::assign_beam;
use crate::error::{Error, Result};
use crate::geometry::{
    beam_spherical_to_cart, cart_to_beam_spherical, BeamModel, PointCloud, SphericalCoord,
};
use crate::rangeops::FeatureMap;

/// H x W grid of (range, intensity); range 0 marks an empty pixel and
/// forces intensity 0 there.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeImage {
    pub height: usize,
    pub width: usize,
    pub range: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl RangeImage {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            range: vec![0.0; height * width],
            intensity: vec![0.0; height * width],
        }
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn range_at(&self, row: usize, col: usize) -> f64 {
        self.range[self.idx(row, col)]
    }

    pub fn intensity_at(&self, row: usize, col: usize) -> f64 {
        self.intensity[self.idx(row, col)]
    }

    pub fn set_pixel(&mut self, row: usize, col: usize, range: f64, intensity: f64) {
        let i = self.idx(row, col);
        self.range[i] = range;
        self.intensity[i] = if range == 0.0 { 0.0 } else { intensity };
    }

    /// Number of pixels holding a return.
    pub fn occupied(&self) -> usize {
        self.range.iter().filter(|&&r| r > 0.0).count()
    }

    /// Columns rotated right by `k`, as under a yaw rotation of the scene.
    pub fn shifted_columns(&self, k: usize) -> RangeImage {
        let mut out = RangeImage::zeros(self.height, self.width);
        for row in 0..self.height {
            for col in 0..self.width {
                let src = (col + self.width - k % self.width) % self.width;
                out.set_pixel(row, col, self.range_at(row, src), self.intensity_at(row, src));
            }
        }
        out
    }
}

/// Azimuth of the center of column `col` in a width-`w` image, in
/// `(-pi, pi]`.
pub fn column_azimuth(col: usize, w: usize) -> f64 {
    (col as f64 + 0.5) / w as f64 * std::f64::consts::TAU - std::f64::consts::PI
}

/// Column index for an azimuth: `floor(((az + pi) / 2pi) * W) mod W`, so
/// the seam azimuth `pi` lands in column 0.
pub fn azimuth_column(azimuth: f64, w: usize) -> usize {
    let u = (((azimuth + std::f64::consts::PI) / std::f64::consts::TAU) * w as f64).floor();
    (u as i64).rem_euclid(w as i64) as usize
}

/// Rasterize a cloud: each point goes to the row of its assigned beam and
/// the column of its azimuth; on collisions the smaller range wins and
/// brings its intensity along. Points on the sensor axis (x = y = 0) have
/// no azimuth and are dropped.
pub fn project(cloud: &PointCloud, model: &BeamModel, width: usize) -> RangeImage {
    assert!(width >= 1 && !model.is_empty());
    let mut img = RangeImage::zeros(model.len(), width);
    for p in &cloud.points {
        let Ok(row) = assign_beam(p, model) else {
            continue;
        };
        let s = cart_to_beam_spherical(p, row, model).expect("row from assign_beam");
        let col = azimuth_column(s.azimuth, width);
        let i = img.idx(row, col);
        if img.range[i] == 0.0 || s.range < img.range[i] {
            img.range[i] = s.range;
            img.intensity[i] = p.intensity;
        }
    }
    img
}

/// Emit one point per occupied pixel, at the pixel-center azimuth.
pub fn unproject(img: &RangeImage, model: &BeamModel) -> Result<PointCloud> {
    if img.height != model.len() {
        return Err(Error::BeamCountMismatch {
            image_rows: img.height,
            model_beams: model.len(),
        });
    }
    let mut points = Vec::with_capacity(img.occupied());
    for (row, beam) in model.beams.iter().enumerate() {
        for col in 0..img.width {
            let range = img.range_at(row, col);
            if range <= 0.0 {
                continue;
            }
            let s = SphericalCoord {
                range,
                azimuth: column_azimuth(col, img.width),
                elevation: beam.pitch,
            };
            let mut p = beam_spherical_to_cart(&s, beam.height);
            p.intensity = img.intensity_at(row, col);
            points.push(p);
        }
    }
    Ok(PointCloud::new(points))
}

/// Spherical coordinates of every pixel: range from the image, azimuth at
/// the column center, elevation at the row's beam pitch. Feeds the
/// meta-kernel operator.
pub fn pixel_spherical_coords(img: &RangeImage, model: &BeamModel) -> Result<Vec<SphericalCoord>> {
    if img.height != model.len() {
        return Err(Error::BeamCountMismatch {
            image_rows: img.height,
            model_beams: model.len(),
        });
    }
    let mut coords = Vec::with_capacity(img.height * img.width);
    for (row, beam) in model.beams.iter().enumerate() {
        for col in 0..img.width {
            coords.push(SphericalCoord {
                range: img.range_at(row, col),
                azimuth: column_azimuth(col, img.width),
                elevation: beam.pitch,
            });
        }
    }
    Ok(coords)
}

/// Range-value mapping into `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormScheme {
    Linear,
    Log,
}

/// Maps ranges (clamped to `[0, max_range]`) and intensities into
/// `[-1, 1]`. The log scheme compresses far ranges:
/// `r -> 2 * log2(r + 1) / log2(max_range + 1) - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub scheme: NormScheme,
    pub max_range: f64,
}

impl Default for Normalizer {
    fn default() -> Self {
        Self {
            scheme: NormScheme::Log,
            max_range: 80.0,
        }
    }
}

impl Normalizer {
    pub fn new(scheme: NormScheme, max_range: f64) -> Result<Self> {
        if !max_range.is_finite() || max_range <= 0.0 {
            return Err(Error::DegenerateConfig("max_range must be positive".into()));
        }
        Ok(Self { scheme, max_range })
    }

    fn map_range(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, self.max_range);
        match self.scheme {
            NormScheme::Linear => 2.0 * r / self.max_range - 1.0,
            NormScheme::Log => 2.0 * (r + 1.0).log2() / (self.max_range + 1.0).log2() - 1.0,
        }
    }

    fn unmap_range(&self, v: f64) -> f64 {
        let r = match self.scheme {
            NormScheme::Linear => (v + 1.0) / 2.0 * self.max_range,
            NormScheme::Log => ((v + 1.0) / 2.0 * (self.max_range + 1.0).log2()).exp2() - 1.0,
        };
        r.clamp(0.0, self.max_range)
    }
}

/// Map a range image to an H x W x 2 feature tensor in `[-1, 1]`
/// (channel 0 range, channel 1 intensity).
pub fn normalize(img: &RangeImage, nz: &Normalizer) -> FeatureMap {
    let mut fm = FeatureMap::zeros(img.height, img.width, 2);
    for row in 0..img.height {
        for col in 0..img.width {
            fm.set(row, col, 0, nz.map_range(img.range_at(row, col)));
            fm.set(row, col, 1, 2.0 * img.intensity_at(row, col) - 1.0);
        }
    }
    fm
}

/// Exact inverse of [`normalize`] up to clamping; pixels decoding to range
/// 0 get intensity 0 to restore the empty-pixel invariant.
pub fn denormalize(fm: &FeatureMap, nz: &Normalizer) -> Result<RangeImage> {
    if fm.channels != 2 {
        return Err(Error::ChannelMismatch {
            expected: 2,
            actual: fm.channels,
        });
    }
    let mut img = RangeImage::zeros(fm.height, fm.width);
    for row in 0..fm.height {
        for col in 0..fm.width {
            let range = nz.unmap_range(fm.get(row, col, 0));
            let intensity = ((fm.get(row, col, 1) + 1.0) / 2.0).clamp(0.0, 1.0);
            img.set_pixel(row, col, range, intensity);
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use crate::synthetic::{height_pattern, ladder_model, pitch_ladder, pixel_centered_cloud};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn single_beam() -> BeamModel {
        ladder_model(&[0.0], &[0.0])
    }

    #[test]
    fn forward_axis_point_maps_to_mid_column() {
        let img = project(
            &PointCloud::new(vec![Point3::new(10.0, 0.0, 0.0, 0.4)]),
            &single_beam(),
            1024,
        );
        assert_eq!(img.occupied(), 1);
        assert!((img.range_at(0, 512) - 10.0).abs() < 1e-12);
        assert_eq!(img.intensity_at(0, 512), 0.4);
    }

    #[test]
    fn left_axis_point_maps_to_column_768() {
        let img = project(
            &PointCloud::new(vec![Point3::new(0.0, 10.0, 0.0, 0.0)]),
            &single_beam(),
            1024,
        );
        assert!(img.range_at(0, 768) > 0.0);
    }

    #[test]
    fn collision_keeps_nearest_return() {
        let cloud = PointCloud::new(vec![
            Point3::new(9.0, 0.0, 0.0, 0.9),
            Point3::new(7.0, 0.0, 0.0, 0.2),
        ]);
        let img = project(&cloud, &single_beam(), 1024);
        assert_eq!(img.range_at(0, 512), 7.0);
        assert_eq!(img.intensity_at(0, 512), 0.2);
    }

    #[test]
    fn empty_cloud_gives_zero_image() {
        let img = project(&PointCloud::default(), &single_beam(), 64);
        assert_eq!(img.occupied(), 0);
    }

    #[test]
    fn unproject_empty_image() {
        let img = RangeImage::zeros(1, 64);
        let cloud = unproject(&img, &single_beam()).unwrap();
        assert!(cloud.is_empty());
    }

    #[test]
    fn unproject_single_pixel_at_center_offset() {
        let mut img = RangeImage::zeros(1, 1024);
        img.set_pixel(0, 512, 10.0, 0.5);
        let cloud = unproject(&img, &single_beam()).unwrap();
        assert_eq!(cloud.len(), 1);
        let delta = std::f64::consts::PI / 1024.0;
        let p = cloud.points[0];
        assert!((p.x - 10.0 * delta.cos()).abs() < 1e-12);
        assert!((p.y - 10.0 * delta.sin()).abs() < 1e-12);
        assert!(p.z.abs() < 1e-12);
        assert_eq!(p.intensity, 0.5);
    }

    #[test]
    fn unproject_height_mismatch() {
        let img = RangeImage::zeros(2, 8);
        assert!(matches!(
            unproject(&img, &single_beam()),
            Err(Error::BeamCountMismatch { image_rows: 2, model_beams: 1 })
        ));
    }

    #[test]
    fn pixel_centered_round_trip_is_tight() {
        let model = ladder_model(
            &pitch_ladder(8, 0.03, -0.35),
            &height_pattern(8, 0.25),
        );
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let width = 512;
        let cloud = pixel_centered_cloud(&model, width, 0.3, 2.0, 70.0, &mut rng);
        let img = project(&cloud, &model, width);
        assert_eq!(img.occupied(), cloud.len());
        let back = unproject(&img, &model).unwrap();
        assert_eq!(back.len(), cloud.len());

        // Pixel-center points survive the round trip almost exactly; match
        // each output to its nearest input.
        for q in &back.points {
            let err = cloud
                .points
                .iter()
                .map(|p| {
                    ((p.x - q.x).powi(2) + (p.y - q.y).powi(2) + (p.z - q.z).powi(2)).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(err < 1e-6, "round-trip error {err}");
        }
    }

    #[test]
    fn quantization_bound_for_arbitrary_azimuths() {
        let model = ladder_model(&pitch_ladder(4, 0.0, -0.3), &height_pattern(4, 0.2));
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let width = 256;
        // One point per (row, col) cell at a random in-cell azimuth.
        let mut points = Vec::new();
        for (j, beam) in model.beams.iter().enumerate() {
            for _ in 0..40 {
                let s = SphericalCoord {
                    range: rng.random_range(5.0..60.0),
                    azimuth: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                    elevation: beam.pitch,
                };
                let mut p = beam_spherical_to_cart(&s, beam.height);
                p.intensity = 0.5;
                let _ = j;
                points.push(p);
            }
        }
        let cloud = PointCloud::new(points);
        let img = project(&cloud, &model, width);
        let back = unproject(&img, &model).unwrap();
        let bound = std::f64::consts::TAU / width as f64;
        for q in &back.points {
            let (err, r) = cloud
                .points
                .iter()
                .map(|p| {
                    let d =
                        ((p.x - q.x).powi(2) + (p.y - q.y).powi(2) + (p.z - q.z).powi(2)).sqrt();
                    (d, p.norm())
                })
                .fold((f64::INFINITY, 0.0), |best, cur| {
                    if cur.0 < best.0 {
                        cur
                    } else {
                        best
                    }
                });
            assert!(err <= bound * r, "error {err} above bound {}", bound * r);
        }
    }

    /// Brute-force rasterizer: collect all candidates per pixel, take min.
    fn brute_project(cloud: &PointCloud, model: &BeamModel, width: usize) -> RangeImage {
        let mut img = RangeImage::zeros(model.len(), width);
        for row in 0..model.len() {
            for col in 0..width {
                let mut best: Option<(f64, f64)> = None;
                for p in &cloud.points {
                    if p.planar_range() == 0.0 {
                        continue;
                    }
                    if assign_beam(p, model).unwrap() != row {
                        continue;
                    }
                    let s = cart_to_beam_spherical(p, row, model).unwrap();
                    if azimuth_column(s.azimuth, width) != col {
                        continue;
                    }
                    if best.is_none() || s.range < best.unwrap().0 {
                        best = Some((s.range, p.intensity));
                    }
                }
                if let Some((r, i)) = best {
                    img.set_pixel(row, col, r, i);
                }
            }
        }
        img
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn nearest_wins_matches_brute_force(seed in 0u64..1000) {
            let model = ladder_model(&pitch_ladder(3, 0.0, -0.2), &[0.1, 0.0, -0.1]);
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let points: Vec<Point3> = (0..60)
                .map(|_| {
                    Point3::new(
                        rng.random_range(-30.0..30.0),
                        rng.random_range(-30.0..30.0),
                        rng.random_range(-3.0..1.0),
                        rng.random_range(0.0..1.0),
                    )
                })
                .collect();
            let cloud = PointCloud::new(points);
            let fast = project(&cloud, &model, 32);
            let brute = brute_project(&cloud, &model, 32);
            prop_assert_eq!(fast, brute);
        }

        #[test]
        fn unproject_count_equals_occupancy(seed in 0u64..1000) {
            let model = ladder_model(&pitch_ladder(4, 0.02, -0.3), &height_pattern(4, 0.2));
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let cloud = pixel_centered_cloud(&model, 64, 0.4, 2.0, 50.0, &mut rng);
            let img = project(&cloud, &model, 64);
            let back = unproject(&img, &model).unwrap();
            prop_assert_eq!(back.len(), img.occupied());
        }
    }

    #[test]
    fn rotation_equals_column_shift() {
        let model = ladder_model(&pitch_ladder(4, 0.02, -0.3), &height_pattern(4, 0.2));
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        let width = 128usize;
        let cloud = pixel_centered_cloud(&model, width, 0.35, 2.0, 60.0, &mut rng);
        let base = project(&cloud, &model, width);
        for k in [1usize, 17, 64, 127] {
            let delta = std::f64::consts::TAU * k as f64 / width as f64;
            let rotated = project(&cloud.rotated_z(delta), &model, width);
            let shifted = base.shifted_columns(k);
            assert_eq!(rotated.occupied(), shifted.occupied(), "k={k}");
            for i in 0..rotated.range.len() {
                assert!(
                    (rotated.range[i] - shifted.range[i]).abs() < 1e-9,
                    "k={k}, pixel {i}"
                );
            }
        }
    }

    #[test]
    fn normalize_endpoints() {
        let nz = Normalizer::default();
        assert_eq!(nz.map_range(0.0), -1.0);
        assert!((nz.map_range(80.0) - 1.0).abs() < 1e-15);
        let lin = Normalizer::new(NormScheme::Linear, 80.0).unwrap();
        assert_eq!(lin.map_range(0.0), -1.0);
        assert!((lin.map_range(80.0) - 1.0).abs() < 1e-15);
        // Values above max_range clamp.
        assert!((nz.map_range(200.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(53);
        for scheme in [NormScheme::Log, NormScheme::Linear] {
            let nz = Normalizer::new(scheme, 80.0).unwrap();
            for _ in 0..10_000 {
                let r = rng.random_range(0.0..80.0);
                let back = nz.unmap_range(nz.map_range(r));
                assert!((back - r).abs() < 1e-6, "{scheme:?}: {r} -> {back}");
            }
        }
    }

    #[test]
    fn normalize_denormalize_image_round_trip() {
        let model = ladder_model(&pitch_ladder(4, 0.02, -0.3), &height_pattern(4, 0.2));
        let mut rng = ChaCha12Rng::seed_from_u64(59);
        let cloud = pixel_centered_cloud(&model, 64, 0.5, 2.0, 79.0, &mut rng);
        let img = project(&cloud, &model, 64);
        let nz = Normalizer::default();
        let back = denormalize(&normalize(&img, &nz), &nz).unwrap();
        assert_eq!(back.height, img.height);
        for i in 0..img.range.len() {
            assert!((back.range[i] - img.range[i]).abs() < 1e-6);
            assert!((back.intensity[i] - img.intensity[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn denormalize_rejects_wrong_channel_count() {
        let fm = FeatureMap::zeros(2, 2, 3);
        assert!(matches!(
            denormalize(&fm, &Normalizer::default()),
            Err(Error::ChannelMismatch { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn seam_azimuth_wraps_to_column_zero() {
        assert_eq!(azimuth_column(std::f64::consts::PI, 1024), 0);
    }

    #[test]
    fn pixel_coords_follow_grid_conventions() {
        let model = ladder_model(&pitch_ladder(3, 0.1, -0.1), &[0.1, 0.0, -0.1]);
        let mut img = RangeImage::zeros(3, 8);
        img.set_pixel(1, 5, 42.0, 0.5);
        let coords = pixel_spherical_coords(&img, &model).unwrap();
        assert_eq!(coords.len(), 24);
        let c = coords[8 + 5];
        assert_eq!(c.range, 42.0);
        assert_eq!(c.azimuth, column_azimuth(5, 8));
        assert_eq!(c.elevation, model.beams[1].pitch);
        assert_eq!(coords[0].range, 0.0);

        let short = RangeImage::zeros(2, 8);
        assert!(pixel_spherical_coords(&short, &model).is_err());
    }
}
