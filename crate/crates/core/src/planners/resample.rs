//! Reducing dense pose paths to a fixed number of waypoints.

use crate::error::{invalid_arg, Result};
use crate::geometry::Pose;

/// Path metric between two poses: `|Δt| + rot_weight · angle`.
pub fn pose_distance(a: &Pose, b: &Pose, rot_weight: f64) -> f64 {
    (a.translation() - b.translation()).norm() + rot_weight * a.angle_to(b)
}

fn check(path: &[Pose], steps: usize) -> Result<()> {
    if path.is_empty() {
        return invalid_arg("cannot resample an empty path");
    }
    if steps < 2 {
        return invalid_arg("need at least two waypoints");
    }
    Ok(())
}

fn cumulative(path: &[Pose], rot_weight: f64) -> Vec<f64> {
    let mut acc = vec![0.0];
    for w in path.windows(2) {
        acc.push(acc.last().unwrap() + pose_distance(&w[0], &w[1], rot_weight));
    }
    acc
}

fn sample_at(path: &[Pose], cum: &[f64], s: f64) -> Pose {
    let i = cum.partition_point(|c| *c <= s).clamp(1, path.len() - 1);
    let span = cum[i] - cum[i - 1];
    let f = if span > 0.0 { ((s - cum[i - 1]) / span).clamp(0.0, 1.0) } else { 1.0 };
    path[i - 1].interpolate(&path[i], f)
}

/// `steps` poses evenly spaced by arc length; both ends are kept exactly.
pub fn resample_arc_length(path: &[Pose], steps: usize, rot_weight: f64) -> Result<Vec<Pose>> {
    check(path, steps)?;
    if path.len() == 1 {
        return Ok(vec![path[0]; steps]);
    }
    let cum = cumulative(path, rot_weight);
    let total = *cum.last().unwrap();
    let mut out: Vec<Pose> = (0..steps)
        .map(|k| sample_at(path, &cum, total * k as f64 / (steps - 1) as f64))
        .collect();
    out[0] = path[0];
    out[steps - 1] = *path.last().unwrap();
    Ok(out)
}

/// Largest deviation of `path[i..=j]` from the interpolation of its ends.
fn chord_error(path: &[Pose], cum: &[f64], i: usize, j: usize, rot_weight: f64) -> f64 {
    let span = cum[j] - cum[i];
    (i + 1..j)
        .map(|k| {
            let f = if span > 0.0 { (cum[k] - cum[i]) / span } else { 0.0 };
            pose_distance(&path[i].interpolate(&path[j], f), &path[k], rot_weight)
        })
        .fold(0.0, f64::max)
}

/// Corner indices of a piecewise-geodesic approximation within `tol`.
fn corners(path: &[Pose], cum: &[f64], tol: f64, rot_weight: f64) -> Vec<usize> {
    let mut keep = vec![0];
    let mut i = 0;
    while i < path.len() - 1 {
        let mut j = i + 1;
        while j + 1 < path.len() && chord_error(path, cum, i, j + 1, rot_weight) <= tol {
            j += 1;
        }
        keep.push(j);
        i = j;
    }
    keep
}

/// Keeps the path's corners as waypoints and spreads the remaining
/// waypoints over the straight pieces by length. The tolerance grows until
/// the corners fit in `steps`.
pub fn resample_preserving_corners(path: &[Pose], steps: usize, rot_weight: f64, tol: f64) -> Result<Vec<Pose>> {
    check(path, steps)?;
    if path.len() == 1 {
        return Ok(vec![path[0]; steps]);
    }
    let cum = cumulative(path, rot_weight);
    let total = *cum.last().unwrap();
    if total == 0.0 {
        return Ok(vec![path[0]; steps]);
    }
    let mut tol = tol.max(1e-12 * total);
    let keep = loop {
        let keep = corners(path, &cum, tol, rot_weight);
        if keep.len() <= steps {
            break keep;
        }
        tol *= 2.0;
    };
    let segments = keep.len() - 1;
    // one interval per piece, the rest by largest remaining length share
    let mut alloc = vec![1usize; segments];
    let spare = steps - 1 - segments;
    let lengths: Vec<f64> = keep.windows(2).map(|w| cum[w[1]] - cum[w[0]]).collect();
    for _ in 0..spare {
        let (best, _) = lengths
            .iter()
            .zip(&alloc)
            .enumerate()
            .map(|(i, (l, a))| (i, l / *a as f64))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        alloc[best] += 1;
    }
    let mut out = vec![path[0]];
    for (w, n) in keep.windows(2).zip(&alloc) {
        let (a, b) = (w[0], w[1]);
        for k in 1..=*n {
            let s = cum[a] + (cum[b] - cum[a]) * k as f64 / *n as f64;
            out.push(if k == *n { path[b] } else { sample_at(path, &cum, s) });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn at(x: f64, y: f64) -> Pose {
        Pose::from_translation(Vector3::new(x, y, 0.0))
    }

    #[test]
    fn arc_length_spacing() {
        let path: Vec<Pose> = [0.0, 0.1, 0.4, 1.0].iter().map(|x| at(*x, 0.0)).collect();
        let out = resample_arc_length(&path, 5, 1.0).unwrap();
        for (k, p) in out.iter().enumerate() {
            assert!((p.translation().x - 0.25 * k as f64).abs() < 1e-12);
        }
        assert_eq!(out.last().unwrap(), path.last().unwrap());
    }

    #[test]
    fn corner_is_a_waypoint() {
        let mut path: Vec<Pose> = (0..=30).map(|k| at(0.0, k as f64 / 30.0)).collect();
        path.extend((1..=90).map(|k| at(k as f64 / 30.0, 1.0)));
        let out = resample_preserving_corners(&path, 12, 1.0, 1e-6).unwrap();
        assert_eq!(out.len(), 12);
        assert!(out.iter().any(|p| (p.translation() - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12));
        assert_eq!(out[0], path[0]);
        assert_eq!(out[11], *path.last().unwrap());
    }
}
