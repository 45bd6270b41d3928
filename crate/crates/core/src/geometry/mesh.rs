//! Triangle meshes and a boundary mesher for unions of axis-aligned boxes.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use super::Aabb;
use crate::error::{invalid_geom, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let mesh = Self {
            vertices,
            triangles,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Rejects out-of-range indices, non-finite vertices and zero-area triangles.
    pub fn validate(&self) -> Result<()> {
        if self.vertices.iter().any(|v| !v.coords.iter().all(|c| c.is_finite())) {
            return invalid_geom("non-finite mesh vertex");
        }
        let scale = Aabb::from_points(&self.vertices).map(|b| b.diagonal()).unwrap_or(0.0);
        let min_area2 = (1e-12 * scale * scale).powi(2);
        for (i, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v as usize >= self.vertices.len()) {
                return invalid_geom(format!("triangle {i} references a missing vertex"));
            }
            let [a, b, c] = self.corners(i);
            if (b - a).cross(&(c - a)).norm_squared() <= min_area2 {
                return invalid_geom(format!("triangle {i} is degenerate"));
            }
        }
        Ok(())
    }

    pub fn corners(&self, tri: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[tri];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn area(&self, tri: usize) -> f64 {
        let [a, b, c] = self.corners(tri);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Outward unit normal, assuming counter-clockwise winding seen from outside.
    pub fn normal(&self, tri: usize) -> Vector3<f64> {
        let [a, b, c] = self.corners(tri);
        (b - a).cross(&(c - a)).normalize()
    }

    /// Signed enclosed volume (divergence theorem); positive for closed,
    /// outward-oriented meshes.
    pub fn volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.corners(i);
                a.coords.dot(&b.coords.cross(&c.coords)) / 6.0
            })
            .sum()
    }

    pub fn aabb(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }

    pub fn transformed(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(f).collect(),
            triangles: self.triangles.clone(),
        }
    }
}

/// Solid made of added boxes minus cut boxes, meshed as one closed surface
/// without interior faces.
#[derive(Debug, Clone, Default)]
pub struct BoxSolid {
    add: Vec<Aabb>,
    cut: Vec<Aabb>,
}

impl BoxSolid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(mut self, min: [f64; 3], max: [f64; 3]) -> Self {
        self.add.push(Aabb {
            min: min.into(),
            max: max.into(),
        });
        self
    }

    pub fn cut(mut self, min: [f64; 3], max: [f64; 3]) -> Self {
        self.cut.push(Aabb {
            min: min.into(),
            max: max.into(),
        });
        self
    }

    /// A centred box with the given full extents.
    pub fn cuboid(size: [f64; 3]) -> Self {
        let h = size.map(|s| s * 0.5);
        Self::new().add([-h[0], -h[1], -h[2]], h)
    }

    fn filled(&self, c: &Point3<f64>) -> bool {
        let strictly_in = |b: &Aabb| (0..3).all(|i| c[i] > b.min[i] && c[i] < b.max[i]);
        self.add.iter().any(strictly_in) && !self.cut.iter().any(strictly_in)
    }

    pub fn mesh(&self) -> Result<TriMesh> {
        let mut coords: [Vec<f64>; 3] = Default::default();
        for b in self.add.iter().chain(&self.cut) {
            for axis in 0..3 {
                coords[axis].push(b.min[axis]);
                coords[axis].push(b.max[axis]);
            }
        }
        for c in coords.iter_mut() {
            c.sort_by(f64::total_cmp);
            c.dedup();
        }
        let dims = [coords[0].len(), coords[1].len(), coords[2].len()];
        if dims.iter().any(|&d| d < 2) {
            return invalid_geom("box solid has no volume");
        }
        let cells = [dims[0] - 1, dims[1] - 1, dims[2] - 1];
        let mut fill = vec![false; cells[0] * cells[1] * cells[2]];
        let idx = |i: usize, j: usize, k: usize| (i * cells[1] + j) * cells[2] + k;
        for i in 0..cells[0] {
            for j in 0..cells[1] {
                for k in 0..cells[2] {
                    let c = Point3::new(
                        0.5 * (coords[0][i] + coords[0][i + 1]),
                        0.5 * (coords[1][j] + coords[1][j + 1]),
                        0.5 * (coords[2][k] + coords[2][k + 1]),
                    );
                    fill[idx(i, j, k)] = self.filled(&c);
                }
            }
        }
        let is_filled = |i: isize, j: isize, k: isize| {
            if i < 0 || j < 0 || k < 0 {
                return false;
            }
            let (i, j, k) = (i as usize, j as usize, k as usize);
            i < cells[0] && j < cells[1] && k < cells[2] && fill[idx(i, j, k)]
        };

        let mut vertices = Vec::new();
        let mut lookup: HashMap<[usize; 3], u32> = HashMap::new();
        let mut vertex = |g: [usize; 3]| -> u32 {
            *lookup.entry(g).or_insert_with(|| {
                vertices.push(Point3::new(coords[0][g[0]], coords[1][g[1]], coords[2][g[2]]));
                (vertices.len() - 1) as u32
            })
        };
        let mut triangles = Vec::new();
        for i in 0..cells[0] {
            for j in 0..cells[1] {
                for k in 0..cells[2] {
                    if !fill[idx(i, j, k)] {
                        continue;
                    }
                    let (si, sj, sk) = (i as isize, j as isize, k as isize);
                    for axis in 0..3 {
                        for dir in [-1isize, 1] {
                            let mut n = [si, sj, sk];
                            n[axis] += dir;
                            if is_filled(n[0], n[1], n[2]) {
                                continue;
                            }
                            // face corners in the plane orthogonal to `axis`
                            let u = (axis + 1) % 3;
                            let v = (axis + 2) % 3;
                            let mut base = [i, j, k];
                            if dir > 0 {
                                base[axis] += 1;
                            }
                            let corner = |du: usize, dv: usize| {
                                let mut g = base;
                                g[u] += du;
                                g[v] += dv;
                                g
                            };
                            let q = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
                            let q = q.map(&mut vertex);
                            // (u, v, axis) is right-handed, so this winding faces +axis
                            if dir > 0 {
                                triangles.push([q[0], q[1], q[2]]);
                                triangles.push([q[0], q[2], q[3]]);
                            } else {
                                triangles.push([q[0], q[2], q[1]]);
                                triangles.push([q[0], q[3], q[2]]);
                            }
                        }
                    }
                }
            }
        }
        if triangles.is_empty() {
            return invalid_geom("box solid is empty after cuts");
        }
        TriMesh::new(vertices, triangles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_is_closed_and_outward() {
        let m = BoxSolid::cuboid([1.0, 2.0, 3.0]).mesh().unwrap();
        assert_eq!(m.triangles.len(), 12);
        assert!((m.volume() - 6.0).abs() < 1e-12);
        for t in 0..m.triangles.len() {
            let [a, b, c] = m.corners(t);
            let centre = (a.coords + b.coords + c.coords) / 3.0;
            assert!(m.normal(t).dot(&centre) > 0.0);
        }
    }

    #[test]
    fn union_has_no_interior_faces() {
        let m = BoxSolid::new()
            .add([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
            .add([1.0, 0.0, 0.0], [2.0, 1.0, 1.0])
            .mesh()
            .unwrap();
        assert_eq!(m.triangles.len(), 20);
        assert!((m.volume() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn plate_with_hole() {
        let m = BoxSolid::new()
            .add([0.0, 0.0, 0.0], [3.0, 3.0, 1.0])
            .cut([1.0, 1.0, -1.0], [2.0, 2.0, 2.0])
            .mesh()
            .unwrap();
        assert!((m.volume() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let v = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0)];
        assert!(TriMesh::new(v, vec![[0, 1, 2]]).is_err());
    }
}
