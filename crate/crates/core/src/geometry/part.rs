use nalgebra::{Matrix3, Point3};
use rand::Rng;

use super::{cloud::centroid, Aabb, TriMesh};
use crate::error::{invalid_geom, Result};

/// A rigid part in its local frame: surface mesh plus a fixed-size surface
/// point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct PartGeometry {
    part_id: usize,
    mesh: TriMesh,
    points: Vec<Point3<f64>>,
    centroid: Point3<f64>,
    aabb: Aabb,
}

impl PartGeometry {
    pub fn new(part_id: usize, mesh: TriMesh, points: Vec<Point3<f64>>) -> Result<Self> {
        if points.is_empty() {
            return invalid_geom(format!("part {part_id} has an empty point cloud"));
        }
        if points.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return invalid_geom(format!("part {part_id} has a non-finite point"));
        }
        mesh.validate()?;
        let mut aabb = Aabb::from_points(&points).expect("non-empty");
        for v in &mesh.vertices {
            aabb.grow(v);
        }
        let centroid = centroid(&points).expect("non-empty");
        Ok(Self {
            part_id,
            mesh,
            points,
            centroid,
            aabb,
        })
    }

    /// A mesh-less part, enough for metric computations.
    pub fn from_points(part_id: usize, points: Vec<Point3<f64>>) -> Result<Self> {
        Self::new(part_id, TriMesh::default(), points)
    }

    /// Meshes `mesh` and samples `count` surface points from it.
    pub fn sampled(part_id: usize, mesh: TriMesh, count: usize, rng: &mut impl Rng) -> Result<Self> {
        let points = sample_surface(&mesh, count, rng)?;
        Self::new(part_id, mesh, points)
    }

    pub fn part_id(&self) -> usize {
        self.part_id
    }

    pub fn with_part_id(mut self, id: usize) -> Self {
        self.part_id = id;
        self
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn centroid(&self) -> &Point3<f64> {
        &self.centroid
    }

    pub fn aabb(&self) -> &Aabb {
        &self.aabb
    }

    /// Enclosed mesh volume, zero for mesh-less parts.
    pub fn volume(&self) -> f64 {
        self.mesh.volume().abs()
    }

    /// Uniform-scale copy, used by normalization.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let mesh = self.mesh.transformed(|p| Point3::from(p.coords * s));
        let points = self.points.iter().map(|p| Point3::from(p.coords * s)).collect();
        Self::new(self.part_id, mesh, points)
    }

    /// Second moment of the point cloud about its centroid, each point
    /// carrying `mass / len` (local frame).
    pub fn point_inertia(&self, mass: f64) -> Matrix3<f64> {
        let m = mass / self.points.len() as f64;
        let mut inertia = Matrix3::zeros();
        for p in &self.points {
            let r = p - self.centroid;
            inertia += (Matrix3::identity() * r.norm_squared() - r * r.transpose()) * m;
        }
        inertia
    }
}

/// Deterministic surface sampling: the mesh corners first (when they fit in
/// a quarter of the budget), then area-weighted uniform samples with the
/// remainder allotted by largest fractional share.
pub fn sample_surface(mesh: &TriMesh, count: usize, rng: &mut impl Rng) -> Result<Vec<Point3<f64>>> {
    if mesh.is_empty() {
        return invalid_geom("cannot sample an empty mesh");
    }
    if count == 0 {
        return invalid_geom("sample count must be positive");
    }
    let mut out = Vec::with_capacity(count);
    let mut used = vec![false; mesh.vertices.len()];
    for t in &mesh.triangles {
        for &v in t {
            used[v as usize] = true;
        }
    }
    let corners: Vec<Point3<f64>> = mesh
        .vertices
        .iter()
        .zip(&used)
        .filter(|(_, u)| **u)
        .map(|(v, _)| *v)
        .collect();
    if corners.len() <= count / 4 {
        out.extend(corners);
    }
    let remaining = count - out.len();
    let areas: Vec<f64> = (0..mesh.triangles.len()).map(|i| mesh.area(i)).collect();
    let total: f64 = areas.iter().sum();
    let mut alloc: Vec<(usize, usize, f64)> = areas
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let share = remaining as f64 * a / total;
            (i, share.floor() as usize, share - share.floor())
        })
        .collect();
    let assigned: usize = alloc.iter().map(|a| a.1).sum();
    let mut order: Vec<usize> = (0..alloc.len()).collect();
    order.sort_by(|&a, &b| alloc[b].2.total_cmp(&alloc[a].2).then(a.cmp(&b)));
    for &i in order.iter().take(remaining - assigned) {
        alloc[i].1 += 1;
    }
    for (tri, n, _) in alloc {
        let [a, b, c] = mesh.corners(tri);
        for _ in 0..n {
            let (mut u, mut v): (f64, f64) = (rng.gen(), rng.gen());
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            out.push(a + (b - a) * u + (c - a) * v);
        }
    }
    debug_assert_eq!(out.len(), count);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxSolid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampling_is_exact_count_and_on_surface() {
        let mesh = BoxSolid::cuboid([1.0, 2.0, 0.5]).mesh().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let part = PartGeometry::sampled(0, mesh, 333, &mut rng).unwrap();
        assert_eq!(part.points().len(), 333);
        for p in part.points() {
            let on_face = (p.x.abs() - 0.5).abs() < 1e-12
                || (p.y.abs() - 1.0).abs() < 1e-12
                || (p.z.abs() - 0.25).abs() < 1e-12;
            assert!(on_face, "{p}");
            assert!(part.aabb().contains(p));
        }
        // corners are included
        assert!(part.points().iter().any(|p| (p - Point3::new(0.5, 1.0, 0.25)).norm() == 0.0));
    }

    #[test]
    fn rejects_empty_cloud() {
        assert!(PartGeometry::from_points(0, vec![]).is_err());
        assert!(PartGeometry::from_points(0, vec![Point3::new(f64::NAN, 0.0, 0.0)]).is_err());
    }
}
