//! Minimal 3D k-d tree for exact nearest-neighbor queries.

/// Balanced k-d tree over 3D points; built once, queried many times.
pub struct KdTree {
    points: Vec<[f64; 3]>,
    // index into `points`, stored in tree order
    order: Vec<usize>,
    // (split axis) per tree node, aligned with `order`
    axes: Vec<u8>,
}

impl KdTree {
    /// Returns `None` for an empty input.
    pub fn build(points: &[[f64; 3]]) -> Option<KdTree> {
        if points.is_empty() {
            return None;
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut axes = vec![0u8; points.len()];
        build_recursive(points, &mut order, &mut axes);
        Some(KdTree {
            points: points.to_vec(),
            order,
            axes,
        })
    }

    /// Squared Euclidean distance from `query` to the nearest stored point.
    pub fn nearest_sq(&self, query: &[f64; 3]) -> f64 {
        let mut best = f64::INFINITY;
        self.search(0, self.order.len(), query, &mut best);
        best
    }

    fn search(&self, lo: usize, hi: usize, query: &[f64; 3], best: &mut f64) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = &self.points[self.order[mid]];
        let d = dist_sq(p, query);
        if d < *best {
            *best = d;
        }
        let axis = self.axes[mid] as usize;
        let delta = query[axis] - p[axis];
        let (near, far) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(near.0, near.1, query, best);
        if delta * delta < *best {
            self.search(far.0, far.1, query, best);
        }
    }
}

fn dist_sq(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

fn widest_axis(points: &[[f64; 3]], idx: &[usize]) -> u8 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in idx {
        for a in 0..3 {
            lo[a] = lo[a].min(points[i][a]);
            hi[a] = hi[a].max(points[i][a]);
        }
    }
    let spans = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let mut best = 0;
    for a in 1..3 {
        if spans[a] > spans[best] {
            best = a;
        }
    }
    best as u8
}

// `idx` and `axes` are parallel subslices covering the same node range.
fn build_recursive(points: &[[f64; 3]], idx: &mut [usize], axes: &mut [u8]) {
    if idx.is_empty() {
        return;
    }
    let axis = widest_axis(points, idx);
    let mid = idx.len() / 2;
    idx.select_nth_unstable_by(mid, |&a, &b| {
        points[a][axis as usize]
            .partial_cmp(&points[b][axis as usize])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    axes[mid] = axis;
    let (left, rest) = idx.split_at_mut(mid);
    let (left_axes, rest_axes) = axes.split_at_mut(mid);
    build_recursive(points, left, left_axes);
    build_recursive(points, &mut rest[1..], &mut rest_axes[1..]);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn empty_input_yields_none() {
        assert!(KdTree::build(&[]).is_none());
    }

    #[test]
    fn single_point() {
        let tree = KdTree::build(&[[1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(tree.nearest_sq(&[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(tree.nearest_sq(&[0.0, 2.0, 3.0]), 1.0);
    }

    #[test]
    fn matches_brute_force_on_random_sets() {
        let mut rng = ChaCha12Rng::seed_from_u64(71);
        let points: Vec<[f64; 3]> = (0..400)
            .map(|_| {
                [
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-2.0..2.0),
                ]
            })
            .collect();
        let tree = KdTree::build(&points).unwrap();
        for _ in 0..500 {
            let q = [
                rng.random_range(-12.0..12.0),
                rng.random_range(-12.0..12.0),
                rng.random_range(-3.0..3.0),
            ];
            let brute = points
                .iter()
                .map(|p| dist_sq(p, &q))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(tree.nearest_sq(&q), brute);
        }
    }

    #[test]
    fn duplicate_points_are_fine() {
        let points = vec![[0.0, 0.0, 0.0]; 17];
        let tree = KdTree::build(&points).unwrap();
        assert_eq!(tree.nearest_sq(&[1.0, 0.0, 0.0]), 1.0);
    }
}
