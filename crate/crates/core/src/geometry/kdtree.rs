//! Static 3-d tree for nearest-neighbour distance queries.

use nalgebra::Point3;

/// Balanced k-d tree stored implicitly: the node for the slice `[lo, hi)`
/// sits at `(lo + hi) / 2`.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3<f64>>,
    axes: Vec<u8>,
}

impl KdTree {
    pub fn build(points: &[Point3<f64>]) -> Self {
        let mut pts = points.to_vec();
        let mut axes = vec![0u8; pts.len()];
        build_rec(&mut pts, &mut axes, 0);
        Self { points: pts, axes }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Squared distance from `q` to the closest stored point.
    pub fn nearest_distance_squared(&self, q: &Point3<f64>) -> f64 {
        let mut best = f64::INFINITY;
        self.search(q, 0, self.points.len(), &mut best);
        best
    }

    fn search(&self, q: &Point3<f64>, lo: usize, hi: usize, best: &mut f64) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let p = &self.points[mid];
        let d2 = (p - q).norm_squared();
        if d2 < *best {
            *best = d2;
        }
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, near.0, near.1, best);
        if diff * diff <= *best {
            self.search(q, far.0, far.1, best);
        }
    }
}

fn build_rec(pts: &mut [Point3<f64>], axes: &mut [u8], _depth: usize) {
    if pts.is_empty() {
        return;
    }
    // split along the widest extent
    let mut lo = pts[0];
    let mut hi = pts[0];
    for p in pts.iter() {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let ext = hi - lo;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = pts.len() / 2;
    pts.select_nth_unstable_by(mid, |a, b| a[axis].total_cmp(&b[axis]));
    axes[mid] = axis as u8;
    let (left, rest) = pts.split_at_mut(mid);
    let (left_axes, rest_axes) = axes.split_at_mut(mid);
    build_rec(left, left_axes, _depth + 1);
    build_rec(&mut rest[1..], &mut rest_axes[1..], _depth + 1);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point3<f64>> = (0..700)
            .map(|_| Point3::new(rng.gen(), rng.gen::<f64>() * 2.0, rng.gen::<f64>() * 0.1))
            .collect();
        let tree = KdTree::build(&pts);
        for _ in 0..300 {
            let q = Point3::new(rng.gen::<f64>() * 1.4 - 0.2, rng.gen(), rng.gen());
            let brute = pts
                .iter()
                .map(|p| (p - q).norm_squared())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(tree.nearest_distance_squared(&q), brute);
        }
    }

    #[test]
    fn handles_duplicates() {
        let pts = vec![Point3::new(1.0, 1.0, 1.0); 40];
        let tree = KdTree::build(&pts);
        assert_eq!(tree.nearest_distance_squared(&Point3::new(1.0, 1.0, 2.0)), 1.0);
    }
}
