//! Point-cloud operations: rigid transforms and chamfer distance.

use nalgebra::Point3;

use super::kdtree::KdTree;
use super::Pose;
use crate::error::{invalid_arg, invalid_geom, Result};
use crate::numeric::CompensatedSum;

/// Clouds larger than this are searched through a k-d tree.
pub const BRUTE_FORCE_LIMIT: usize = 256;

pub fn apply_pose(pose: &Pose, cloud: &[Point3<f64>]) -> Result<Vec<Point3<f64>>> {
    if !pose.is_finite() {
        return invalid_geom("non-finite pose");
    }
    if cloud.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
        return invalid_geom("non-finite point in cloud");
    }
    Ok(cloud.iter().map(|p| pose.transform_point(p)).collect())
}

/// Nearest-neighbour index over one cloud.
pub enum NearestIndex<'a> {
    Brute(&'a [Point3<f64>]),
    Tree(KdTree),
}

impl<'a> NearestIndex<'a> {
    pub fn new(points: &'a [Point3<f64>]) -> Self {
        if points.len() > BRUTE_FORCE_LIMIT {
            Self::Tree(KdTree::build(points))
        } else {
            Self::Brute(points)
        }
    }

    pub fn brute(points: &'a [Point3<f64>]) -> Self {
        Self::Brute(points)
    }

    pub fn tree(points: &'a [Point3<f64>]) -> Self {
        Self::Tree(KdTree::build(points))
    }

    pub fn nearest_distance_squared(&self, q: &Point3<f64>) -> f64 {
        match self {
            Self::Brute(pts) => pts
                .iter()
                .map(|p| (p - q).norm_squared())
                .fold(f64::INFINITY, f64::min),
            Self::Tree(tree) => tree.nearest_distance_squared(q),
        }
    }
}

fn directed_mean(from: &[Point3<f64>], to: &NearestIndex<'_>) -> f64 {
    let acc: CompensatedSum = from.iter().map(|p| to.nearest_distance_squared(p)).collect();
    acc.value() / from.len() as f64
}

/// Bidirectional chamfer distance: mean squared nearest-neighbour distance
/// from `a` to `b` plus the same from `b` to `a`.
pub fn chamfer(a: &[Point3<f64>], b: &[Point3<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return invalid_arg("chamfer distance needs two non-empty clouds");
    }
    let ia = NearestIndex::new(a);
    let ib = NearestIndex::new(b);
    Ok(directed_mean(a, &ib) + directed_mean(b, &ia))
}

/// Chamfer distance with an explicit search strategy, for cross-checking.
pub fn chamfer_with(a: &[Point3<f64>], b: &[Point3<f64>], use_tree: bool) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return invalid_arg("chamfer distance needs two non-empty clouds");
    }
    let (ia, ib) = if use_tree {
        (NearestIndex::tree(a), NearestIndex::tree(b))
    } else {
        (NearestIndex::brute(a), NearestIndex::brute(b))
    };
    Ok(directed_mean(a, &ib) + directed_mean(b, &ia))
}

pub fn centroid(cloud: &[Point3<f64>]) -> Option<Point3<f64>> {
    if cloud.is_empty() {
        return None;
    }
    let mut acc = [CompensatedSum::new(); 3];
    for p in cloud {
        for (i, a) in acc.iter_mut().enumerate() {
            a.add(p[i]);
        }
    }
    let n = cloud.len() as f64;
    Some(Point3::new(acc[0].value() / n, acc[1].value() / n, acc[2].value() / n))
}
