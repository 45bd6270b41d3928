//! Signed distance to closed triangle meshes.

use nalgebra::{Point3, Vector3};

use crate::error::{invalid_geom, Result};
use crate::geometry::{Aabb, Pose, TriMesh};

const LEAF_SIZE: usize = 4;

// Skewed so rays rarely graze edges of axis-aligned geometry.
const RAY_DIRECTIONS: [[f64; 3]; 3] = [
    [0.573_462_1, 0.579_831_7, 0.578_839_3],
    [-0.612_372_4, 0.353_553_4, 0.707_106_8],
    [0.267_261_2, -0.534_522_5, 0.801_783_7],
];

#[derive(Debug, Clone)]
struct Node {
    aabb: Aabb,
    // leaf: triangles `order[start..start + count]`; inner: children at `left`, `left + 1`
    start: usize,
    count: usize,
    left: usize,
}

/// Bounding-volume hierarchy over a mesh, in the mesh's local frame.
#[derive(Debug, Clone)]
pub struct MeshCollider {
    tris: Vec<[Point3<f64>; 3]>,
    normals: Vec<Vector3<f64>>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Result of a signed-distance query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceQuery {
    /// Negative inside the mesh.
    pub signed_distance: f64,
    pub closest: Point3<f64>,
    /// Unit vector pointing out of the mesh at `closest`.
    pub normal: Vector3<f64>,
}

fn tri_aabb(t: &[Point3<f64>; 3]) -> Aabb {
    Aabb::from_points(t.iter()).expect("three corners")
}

impl MeshCollider {
    pub fn new(mesh: &TriMesh) -> Result<Self> {
        mesh.validate()?;
        if mesh.triangles.is_empty() {
            return invalid_geom("collider needs at least one triangle");
        }
        let tris: Vec<_> = (0..mesh.triangles.len()).map(|i| mesh.corners(i)).collect();
        let normals = (0..mesh.triangles.len()).map(|i| mesh.normal(i)).collect();
        let mut out = Self {
            order: (0..tris.len()).collect(),
            tris,
            normals,
            nodes: Vec::new(),
        };
        out.nodes.push(Node {
            aabb: tri_aabb(&out.tris[0]),
            start: 0,
            count: 0,
            left: 0,
        });
        out.build(0, 0, out.tris.len());
        Ok(out)
    }

    fn build(&mut self, node: usize, start: usize, end: usize) {
        let mut aabb = tri_aabb(&self.tris[self.order[start]]);
        for &t in &self.order[start + 1..end] {
            aabb = aabb.union(&tri_aabb(&self.tris[t]));
        }
        self.nodes[node].aabb = aabb;
        if end - start <= LEAF_SIZE {
            self.nodes[node].start = start;
            self.nodes[node].count = end - start;
            return;
        }
        let ext = aabb.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let tris = &self.tris;
        let key = |t: &usize| tris[*t].iter().map(|p| p[axis]).sum::<f64>();
        self.order[start..end].sort_by(|a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)));
        let mid = (start + end) / 2;
        let left = self.nodes.len();
        let placeholder = self.nodes[node].clone();
        self.nodes.push(placeholder.clone());
        self.nodes.push(placeholder);
        self.nodes[node].left = left;
        self.build(left, start, mid);
        self.build(left + 1, mid, end);
    }

    pub fn aabb(&self) -> &Aabb {
        &self.nodes[0].aabb
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    /// Closest surface point within `sqrt(max_d2)`, with its triangle.
    fn closest(&self, p: &Point3<f64>, max_d2: f64) -> Option<(f64, Point3<f64>, usize)> {
        let mut best: Option<(f64, Point3<f64>, usize)> = None;
        let mut bound = max_d2;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.aabb.distance_squared_to(p) >= bound {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start..node.start + node.count] {
                    let q = closest_on_triangle(p, &self.tris[t]);
                    let d2 = (p - q).norm_squared();
                    if d2 < bound || (best.is_none() && d2 <= bound) {
                        bound = d2;
                        best = Some((d2, q, t));
                    }
                }
            } else {
                let (a, b) = (node.left, node.left + 1);
                let da = self.nodes[a].aabb.distance_squared_to(p);
                let db = self.nodes[b].aabb.distance_squared_to(p);
                // nearer child popped first
                if da <= db {
                    stack.push(b);
                    stack.push(a);
                } else {
                    stack.push(a);
                    stack.push(b);
                }
            }
        }
        best
    }

    /// Crossings of the ray from `p` along `dir`; `None` when a hit is too
    /// close to an edge or the ray grazes a face.
    fn crossings(&self, p: &Point3<f64>, dir: &Vector3<f64>) -> Option<usize> {
        let mut count = 0usize;
        let inv = Vector3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !ray_hits_box(p, &inv, &node.aabb) {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start..node.start + node.count] {
                    match ray_triangle(p, dir, &self.tris[t]) {
                        RayHit::Miss => {}
                        RayHit::Hit => count += 1,
                        RayHit::Ambiguous => return None,
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.left + 1);
            }
        }
        Some(count)
    }

    /// Ray-parity containment test.
    pub fn contains(&self, p: &Point3<f64>) -> bool {
        if !self.aabb().contains(p) {
            return false;
        }
        for d in RAY_DIRECTIONS {
            if let Some(c) = self.crossings(p, &Vector3::from(d)) {
                return c % 2 == 1;
            }
        }
        // every direction grazed an edge: retry from a slightly moved origin
        let nudged = p + Vector3::new(1e-9, 2e-9, 3e-9) * (1.0 + p.coords.abs().max());
        self.crossings(&nudged, &Vector3::from(RAY_DIRECTIONS[0]))
            .map(|c| c % 2 == 1)
            .unwrap_or(false)
    }

    /// Signed distance and surface normal at `p`, or `None` when `p` lies
    /// outside and at least `cutoff` away.
    pub fn query(&self, p: &Point3<f64>, cutoff: f64) -> Option<SurfaceQuery> {
        let root = self.aabb();
        let outside = root.distance_squared_to(p);
        // tiny cutoffs square to zero, and points in the box must go through
        if outside > 0.0 && outside >= cutoff * cutoff {
            return None;
        }
        let inside = self.contains(p);
        let limit = if inside { f64::INFINITY } else { cutoff * cutoff };
        let (d2, closest, tri) = self.closest(p, limit)?;
        let d = d2.sqrt();
        let normal = if d > 1e-12 {
            if inside {
                (closest - p) / d
            } else {
                (p - closest) / d
            }
        } else {
            self.normals[tri]
        };
        Some(SurfaceQuery {
            signed_distance: if inside { -d } else { d },
            closest,
            normal,
        })
    }

    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.query(p, f64::INFINITY).map(|q| q.signed_distance).unwrap_or(f64::INFINITY)
    }
}

/// One point of a body touching another body's surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    /// World-space contact point on the querying body.
    pub point: Point3<f64>,
    /// World-space unit normal pushing the querying body out.
    pub normal: Vector3<f64>,
    /// `thickness − signed distance`; negative only within the adhesion band.
    pub depth: f64,
}

/// Contacts of a point cloud (posed) against one collider (posed).
pub fn contacts_against(
    points: &[Point3<f64>],
    pose: &Pose,
    collider: &MeshCollider,
    collider_pose: &Pose,
    thickness: f64,
    ka: f64,
    out: &mut Vec<Contact>,
) {
    let cutoff = thickness + ka;
    for p in points {
        let world = pose.transform_point(p);
        let local = collider_pose.inverse_transform_point(&world);
        if let Some(q) = collider.query(&local, cutoff) {
            if q.signed_distance < cutoff {
                out.push(Contact {
                    point: world,
                    normal: collider_pose.rotate_vector(&q.normal),
                    depth: thickness - q.signed_distance,
                });
            }
        }
    }
}

/// Contacts of the moving part's surface points against every static mesh.
pub fn collide(
    moving_points: &[Point3<f64>],
    pose: &Pose,
    statics: &[(&MeshCollider, Pose)],
    thickness: f64,
    ka: f64,
) -> Vec<Contact> {
    let mut out = Vec::new();
    for (collider, static_pose) in statics {
        contacts_against(moving_points, pose, collider, static_pose, thickness, ka, &mut out);
    }
    out
}

fn ray_hits_box(o: &Point3<f64>, inv: &Vector3<f64>, b: &Aabb) -> bool {
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for i in 0..3 {
        let a = (b.min[i] - o[i]) * inv[i];
        let c = (b.max[i] - o[i]) * inv[i];
        let (lo, hi) = if a <= c { (a, c) } else { (c, a) };
        t0 = t0.max(lo);
        t1 = t1.min(hi);
        if t0 > t1 {
            return false;
        }
    }
    true
}

enum RayHit {
    Miss,
    Hit,
    Ambiguous,
}

fn ray_triangle(o: &Point3<f64>, d: &Vector3<f64>, t: &[Point3<f64>; 3]) -> RayHit {
    const EDGE_EPS: f64 = 1e-10;
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let pv = d.cross(&e2);
    let det = e1.dot(&pv);
    let scale = e1.norm() * e2.norm();
    if det.abs() <= 1e-12 * scale {
        return RayHit::Miss;
    }
    let inv = 1.0 / det;
    let s = o - t[0];
    let u = s.dot(&pv) * inv;
    if u < -EDGE_EPS || u > 1.0 + EDGE_EPS {
        return RayHit::Miss;
    }
    let qv = s.cross(&e1);
    let v = d.dot(&qv) * inv;
    if v < -EDGE_EPS || u + v > 1.0 + EDGE_EPS {
        return RayHit::Miss;
    }
    let dist = e2.dot(&qv) * inv;
    if dist <= 0.0 {
        return RayHit::Miss;
    }
    if u < EDGE_EPS || v < EDGE_EPS || u + v > 1.0 - EDGE_EPS {
        return RayHit::Ambiguous;
    }
    RayHit::Hit
}

/// Closest point on a triangle (Voronoi-region walk).
pub fn closest_on_triangle(p: &Point3<f64>, t: &[Point3<f64>; 3]) -> Point3<f64> {
    let (a, b, c) = (t[0], t[1], t[2]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    // inside the face: orthogonal projection onto the plane
    let n = ab.cross(&ac);
    p - n * (ap.dot(&n) / n.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxSolid;

    fn unit_cube() -> MeshCollider {
        let mesh = BoxSolid::new().add([-0.5; 3], [0.5; 3]).mesh().unwrap();
        MeshCollider::new(&mesh).unwrap()
    }

    fn brute_distance(c: &MeshCollider, p: &Point3<f64>) -> f64 {
        c.tris
            .iter()
            .map(|t| (p - closest_on_triangle(p, t)).norm())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn cube_center_and_surface() {
        let c = unit_cube();
        let q = c.query(&Point3::origin(), 1e-5).unwrap();
        assert!((q.signed_distance + 0.5).abs() < 1e-15);
        assert!((q.normal.norm() - 1.0).abs() < 1e-12);
        let surface = Point3::new(0.5, 0.1, 0.2);
        let q = c.query(&surface, 1e-5).unwrap();
        assert_eq!(q.signed_distance, 0.0);
        assert!((q.normal - Vector3::x()).norm() < 1e-12);
        assert!(c.query(&Point3::new(2.0, 0.0, 0.0), 1e-5).is_none());
        let near = c.query(&Point3::new(0.5 + 5e-6, 0.0, 0.0), 1e-5).unwrap();
        assert!((near.signed_distance - 5e-6).abs() < 1e-15);
    }

    #[test]
    fn matches_brute_force_on_notched_solid() {
        let mesh = BoxSolid::new()
            .add([0.0, 0.0, 0.0], [3.0, 2.0, 1.0])
            .cut([1.0, 0.5, 0.5], [2.0, 1.5, 1.0])
            .mesh()
            .unwrap();
        let c = MeshCollider::new(&mesh).unwrap();
        let mut x = 0.123f64;
        for _ in 0..500 {
            let mut r = || {
                x = (x * 997.0 + 0.31).fract();
                x
            };
            let p = Point3::new(r() * 4.0 - 0.5, r() * 3.0 - 0.5, r() * 2.0 - 0.5);
            let sd = c.signed_distance(&p);
            assert!((sd.abs() - brute_distance(&c, &p)).abs() < 1e-12);
            let inside_notch = p.x > 1.0 && p.x < 2.0 && p.y > 0.5 && p.y < 1.5 && p.z > 0.5;
            let inside_box = p.x > 0.0 && p.x < 3.0 && p.y > 0.0 && p.y < 2.0 && p.z > 0.0 && p.z < 1.0;
            if sd.abs() > 1e-9 {
                assert_eq!(sd < 0.0, inside_box && !inside_notch, "{p:?}");
            }
        }
    }

    #[test]
    fn grid_points_on_edges_are_classified() {
        let c = unit_cube();
        for &v in &[-0.25, 0.0, 0.25] {
            assert!(c.contains(&Point3::new(v, v, v)));
            assert!(c.contains(&Point3::new(0.0, v, 0.0)));
        }
        assert!(!c.contains(&Point3::new(0.75, 0.0, 0.0)));
    }

    #[test]
    fn posed_contacts() {
        let c = unit_cube();
        let statics = [(&c, Pose::from_translation(Vector3::new(1.0, 0.0, 0.0)))];
        let pts = [Point3::new(0.6, 0.0, 0.0), Point3::new(0.0, 0.0, 0.0)];
        let contacts = collide(&pts, &Pose::identity(), &statics, 1e-5, 0.0);
        assert_eq!(contacts.len(), 1);
        assert!((contacts[0].depth - (0.1 + 1e-5)).abs() < 1e-12);
        assert!((contacts[0].normal + Vector3::x()).norm() < 1e-12);
    }
}
