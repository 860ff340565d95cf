//! Generative-evaluation metrics: BEV-histogram JSD and MMD, Chamfer
//! distance, range MAE, and the Fréchet distance over externally supplied
//! feature matrices.

pub mod kdtree;
pub mod linalg;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::projection::RangeImage;
use kdtree::KdTree;
use linalg::{matmul, psd_sqrt, symmetric_eigen};

/// Axis-aligned bird's-eye-view bounds in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BevBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for BevBounds {
    fn default() -> Self {
        Self {
            x_min: -50.0,
            x_max: 50.0,
            y_min: -50.0,
            y_max: 50.0,
        }
    }
}

/// Square occupancy histogram over the ground plane; `counts[ix * bins + iy]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BevHistogram {
    pub bins: usize,
    pub bounds: BevBounds,
    pub counts: Vec<f64>,
}

impl BevHistogram {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    fn normalized(&self) -> Result<Vec<f64>> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::ZeroMassHistogram);
        }
        Ok(self.counts.iter().map(|c| c / total).collect())
    }

    fn same_grid(&self, other: &BevHistogram) -> bool {
        self.bins == other.bins && self.bounds == other.bounds
    }
}

/// Count points into a `bins x bins` grid over `(x, y)`; points outside the
/// bounds are dropped, upper edges are exclusive except on the final cell.
pub fn bev_histogram(cloud: &PointCloud, bounds: BevBounds, bins: usize) -> Result<BevHistogram> {
    let finite = [bounds.x_min, bounds.x_max, bounds.y_min, bounds.y_max]
        .iter()
        .all(|v| v.is_finite());
    if !finite || bounds.x_min >= bounds.x_max || bounds.y_min >= bounds.y_max {
        return Err(Error::DegenerateBounds);
    }
    if bins < 1 {
        return Err(Error::DegenerateConfig("need >= 1 histogram bin".into()));
    }
    let mut counts = vec![0.0; bins * bins];
    let (sx, sy) = (
        bins as f64 / (bounds.x_max - bounds.x_min),
        bins as f64 / (bounds.y_max - bounds.y_min),
    );
    for p in &cloud.points {
        if p.x < bounds.x_min || p.x > bounds.x_max || p.y < bounds.y_min || p.y > bounds.y_max {
            continue;
        }
        let ix = (((p.x - bounds.x_min) * sx) as usize).min(bins - 1);
        let iy = (((p.y - bounds.y_min) * sy) as usize).min(bins - 1);
        counts[ix * bins + iy] += 1.0;
    }
    Ok(BevHistogram {
        bins,
        bounds,
        counts,
    })
}

fn aggregate(set: &[BevHistogram]) -> Result<Vec<f64>> {
    let first = set.first().ok_or(Error::EmptyHistogramSet)?;
    let mut sum = vec![0.0; first.counts.len()];
    for h in set {
        if !h.same_grid(first) {
            return Err(Error::GridMismatch {
                left_bins: first.bins,
                right_bins: h.bins,
            });
        }
        for (s, c) in sum.iter_mut().zip(&h.counts) {
            *s += c;
        }
    }
    let total: f64 = sum.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroMassHistogram);
    }
    for s in sum.iter_mut() {
        *s /= total;
    }
    Ok(sum)
}

fn check_grids(set_a: &[BevHistogram], set_b: &[BevHistogram]) -> Result<()> {
    let (a, b) = match (set_a.first(), set_b.first()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::EmptyHistogramSet),
    };
    if !a.same_grid(b) {
        return Err(Error::GridMismatch {
            left_bins: a.bins,
            right_bins: b.bins,
        });
    }
    Ok(())
}

/// Jensen-Shannon divergence (nats) between the two sets' aggregate
/// histograms, each summed over the set and normalized; `0 log 0 = 0`.
pub fn jsd(set_a: &[BevHistogram], set_b: &[BevHistogram]) -> Result<f64> {
    check_grids(set_a, set_b)?;
    let p = aggregate(set_a)?;
    let q = aggregate(set_b)?;
    let kl_to_mid = |r: &[f64], s: &[f64]| -> f64 {
        r.iter()
            .zip(s)
            .map(|(&ri, &si)| {
                if ri <= 0.0 {
                    0.0
                } else {
                    ri * (ri / ((ri + si) / 2.0)).ln()
                }
            })
            .sum()
    };
    Ok(0.5 * kl_to_mid(&p, &q) + 0.5 * kl_to_mid(&q, &p))
}

/// Squared maximum mean discrepancy (biased V-statistic) with a Gaussian
/// kernel over per-sample-normalized histograms.
///
/// The bandwidth defaults to the median positive pairwise distance over the
/// pooled sets (1.0 if every pooled pair coincides); negatives from
/// floating-point cancellation clamp to zero.
pub fn mmd(set_a: &[BevHistogram], set_b: &[BevHistogram], bandwidth: Option<f64>) -> Result<f64> {
    check_grids(set_a, set_b)?;
    let m = set_a.len();
    let n = set_b.len();
    let mut pooled: Vec<Vec<f64>> = Vec::with_capacity(m + n);
    for h in set_a.iter().chain(set_b) {
        pooled.push(h.normalized()?);
    }

    let total = m + n;
    let mut dist_sq = vec![0.0; total * total];
    for i in 0..total {
        for j in 0..total {
            let d: f64 = pooled[i]
                .iter()
                .zip(&pooled[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dist_sq[i * total + j] = d;
        }
    }

    let gamma = match bandwidth {
        Some(g) if g > 0.0 => g,
        Some(g) => {
            return Err(Error::DegenerateConfig(format!(
                "bandwidth must be positive, got {g}"
            )))
        }
        None => {
            let mut dists: Vec<f64> = (0..total)
                .flat_map(|i| ((i + 1)..total).map(move |j| (i, j)))
                .map(|(i, j)| dist_sq[i * total + j].sqrt())
                .filter(|&d| d > 0.0)
                .collect();
            if dists.is_empty() {
                1.0
            } else {
                dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
                dists[dists.len() / 2]
            }
        }
    };

    let kernel = |i: usize, j: usize| (-dist_sq[i * total + j] / (2.0 * gamma * gamma)).exp();
    let mut sum_aa = 0.0;
    for i in 0..m {
        for j in 0..m {
            sum_aa += kernel(i, j);
        }
    }
    let mut sum_bb = 0.0;
    for i in 0..n {
        for j in 0..n {
            sum_bb += kernel(m + i, m + j);
        }
    }
    let mut sum_ab = 0.0;
    for i in 0..m {
        for j in 0..n {
            sum_ab += kernel(i, m + j);
        }
    }
    let value =
        sum_aa / (m * m) as f64 + sum_bb / (n * n) as f64 - 2.0 * sum_ab / (m * n) as f64;
    Ok(value.max(0.0))
}

/// Symmetric Chamfer distance: mean squared nearest-neighbor distance from
/// each cloud to the other, summed. Nearest neighbors come from a k-d tree
/// and are exact.
pub fn chamfer(p: &PointCloud, q: &PointCloud) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::EmptyPointCloud);
    }
    let to_array = |c: &PointCloud| -> Vec<[f64; 3]> {
        c.points.iter().map(|p| [p.x, p.y, p.z]).collect()
    };
    let (pa, qa) = (to_array(p), to_array(q));
    let direction = |from: &[[f64; 3]], to: &[[f64; 3]]| -> f64 {
        let tree = KdTree::build(to).expect("non-empty");
        from.iter().map(|pt| tree.nearest_sq(pt)).sum::<f64>() / from.len() as f64
    };
    Ok(direction(&pa, &qa) + direction(&qa, &pa))
}

/// Pixel-selection policy for [`range_mae`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidPolicy {
    /// Average over every pixel.
    All,
    /// Average only over pixels occupied in both images.
    BothValid,
}

/// Mean absolute range difference over the selected pixels.
pub fn range_mae(a: &RangeImage, b: &RangeImage, policy: ValidPolicy) -> Result<f64> {
    if a.height != b.height || a.width != b.width {
        return Err(Error::ShapeMismatch {
            expected: vec![a.height, a.width],
            actual: vec![b.height, b.width],
        });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (ra, rb) in a.range.iter().zip(&b.range) {
        let keep = match policy {
            ValidPolicy::All => true,
            ValidPolicy::BothValid => *ra > 0.0 && *rb > 0.0,
        };
        if keep {
            sum += (ra - rb).abs();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoValidPixels);
    }
    Ok(sum / count as f64)
}

/// Row-major n x D feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Sample mean and unbiased covariance of a feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: Vec<f64>,
    /// D x D row-major covariance, symmetrized.
    pub cov: Vec<f64>,
    pub n: usize,
}

/// Fit mean and covariance (divisor n-1) to the rows of `features`.
pub fn gaussian_stats(features: &FeatureMatrix) -> Result<GaussianStats> {
    let (n, d) = (features.rows, features.cols);
    if n < 2 {
        return Err(Error::InsufficientSamples(n));
    }
    if features.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteStats);
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(features.row(i)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for i in 0..n {
        for (c, (v, m)) in centered.iter_mut().zip(features.row(i).iter().zip(&mean)) {
            *c = v - m;
        }
        for r in 0..d {
            for c in r..d {
                cov[r * d + c] += centered[r] * centered[c];
            }
        }
    }
    let denom = (n - 1) as f64;
    for r in 0..d {
        for c in r..d {
            let v = cov[r * d + c] / denom;
            cov[r * d + c] = v;
            cov[c * d + r] = v;
        }
    }
    Ok(GaussianStats { mean, cov, n })
}

/// Fréchet distance between two Gaussian fits, with a note of whether the
/// jitter fallback fired.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetResult {
    pub value: f64,
    pub jitter_applied: bool,
}

/// `|mu1 - mu2|^2 + tr(S1 + S2 - 2 (S1 S2)^{1/2})`, the cross term computed
/// through the symmetric form `sqrt(S1)^T S2 sqrt(S1)` with eigenvalues
/// clamped at zero. On eigensolver failure the computation retries once
/// with `1e-10 I` added to both covariances and reports that in the result.
pub fn frechet_distance(g1: &GaussianStats, g2: &GaussianStats) -> Result<FrechetResult> {
    let d = g1.mean.len();
    if g2.mean.len() != d || g1.cov.len() != d * d || g2.cov.len() != d * d {
        return Err(Error::DimensionMismatch {
            left: g1.mean.len(),
            right: g2.mean.len(),
        });
    }
    let finite = |g: &GaussianStats| {
        g.mean.iter().all(|v| v.is_finite()) && g.cov.iter().all(|v| v.is_finite())
    };
    if !finite(g1) || !finite(g2) {
        return Err(Error::NonFiniteStats);
    }

    let mean_term: f64 = g1
        .mean
        .iter()
        .zip(&g2.mean)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let trace = |m: &[f64]| (0..d).map(|i| m[i * d + i]).sum::<f64>();

    let attempt = |cov1: &[f64], cov2: &[f64]| -> Result<f64> {
        let root1 = psd_sqrt(cov1, d)?;
        let mut inner = matmul(&matmul(&root1, cov2, d), &root1, d);
        for r in 0..d {
            for c in (r + 1)..d {
                let v = (inner[r * d + c] + inner[c * d + r]) / 2.0;
                inner[r * d + c] = v;
                inner[c * d + r] = v;
            }
        }
        let eig = symmetric_eigen(&inner, d)?;
        let cross: f64 = eig.values.iter().map(|&l| l.max(0.0).sqrt()).sum();
        let value = mean_term + trace(cov1) + trace(cov2) - 2.0 * cross;
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFiniteStats)
        }
    };

    match attempt(&g1.cov, &g2.cov) {
        Ok(value) => Ok(FrechetResult {
            value,
            jitter_applied: false,
        }),
        Err(_) => {
            let jittered = |cov: &[f64]| -> Vec<f64> {
                let mut out = cov.to_vec();
                for i in 0..d {
                    out[i * d + i] += 1e-10;
                }
                out
            };
            let value = attempt(&jittered(&g1.cov), &jittered(&g2.cov))?;
            Ok(FrechetResult {
                value,
                jitter_applied: true,
            })
        }
    }
}
