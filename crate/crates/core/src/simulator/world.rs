//! Rigid bodies coupled by penalty contacts, advanced with a linearly
//! implicit Euler step.

use nalgebra::{DMatrix, DVector, Matrix3, Point3, UnitQuaternion, Vector3, Vector6};

use super::collider::{contacts_against, Contact, MeshCollider};
use super::config::SimConfig;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, PartGeometry, Pose};

const MAX_ACTIVE_SET_PASSES: usize = 4;

/// Mass and body-frame inertia about the point-cloud centroid.
pub fn mass_properties(part: &PartGeometry, density: f64) -> (f64, Matrix3<f64>) {
    let mut volume = part.volume();
    if !(volume > 0.0) {
        volume = part.aabb().volume();
    }
    if !(volume > 0.0) {
        volume = 1.0;
    }
    let mass = density * volume;
    let diag = part.aabb().diagonal().max(1e-9);
    // flat or collinear clouds would give a singular tensor
    let floor = Matrix3::identity() * (1e-3 * mass * diag * diag);
    (mass, part.point_inertia(mass) + floor)
}

pub(crate) struct Body<'a> {
    pub part: &'a PartGeometry,
    pub collider: Option<&'a MeshCollider>,
    pub dynamic: bool,
    pub mass: f64,
    pub inertia: Matrix3<f64>,
    pub rotation: UnitQuaternion<f64>,
    /// World position of the centroid.
    pub com: Vector3<f64>,
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl<'a> Body<'a> {
    pub fn new(
        part: &'a PartGeometry,
        collider: Option<&'a MeshCollider>,
        pose: &Pose,
        dynamic: bool,
        density: f64,
    ) -> Self {
        let (mass, inertia) = mass_properties(part, density);
        let mut body = Self {
            part,
            collider,
            dynamic,
            mass,
            inertia,
            rotation: UnitQuaternion::identity(),
            com: Vector3::zeros(),
            linear: Vector3::zeros(),
            angular: Vector3::zeros(),
            force: Vector3::zeros(),
            torque: Vector3::zeros(),
        };
        body.set_pose(pose);
        body
    }

    pub fn com_local(&self) -> Vector3<f64> {
        self.part.centroid().coords
    }

    pub fn pose(&self) -> Pose {
        Pose::from_parts(self.rotation, self.com - self.rotation * self.com_local())
    }

    pub fn set_pose(&mut self, pose: &Pose) {
        self.rotation = *pose.rotation();
        self.com = pose.translation() + pose.rotation() * self.com_local();
    }

    fn world_aabb(&self, local: &Aabb, margin: f64) -> Aabb {
        let pose = self.pose();
        let corners = (0..8).map(|i| {
            let c = Point3::new(
                if i & 1 == 0 { local.min.x } else { local.max.x },
                if i & 2 == 0 { local.min.y } else { local.max.y },
                if i & 4 == 0 { local.min.z } else { local.max.z },
            );
            pose.transform_point(&c)
        });
        let pts: Vec<_> = corners.collect();
        Aabb::from_points(pts.iter()).expect("eight corners").inflated(margin)
    }

    fn world_inertia(&self) -> Matrix3<f64> {
        let r = self.rotation.to_rotation_matrix();
        r.matrix() * self.inertia * r.matrix().transpose()
    }
}

/// A contact between the points of body `a` and the surface of body `b`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BodyContact {
    pub a: usize,
    pub b: usize,
    pub contact: Contact,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct StepStats {
    pub contacts: usize,
    pub max_depth: f64,
    /// Whether any contact carried force after the active-set passes.
    pub loaded: bool,
}

pub(crate) struct World<'a> {
    pub bodies: Vec<Body<'a>>,
    pub config: SimConfig,
}

type Jacobian = [(usize, Vector6<f64>); 2];

impl<'a> World<'a> {
    pub fn new(config: SimConfig) -> Self {
        Self {
            bodies: Vec::new(),
            config,
        }
    }

    pub fn add(&mut self, body: Body<'a>) -> usize {
        self.bodies.push(body);
        self.bodies.len() - 1
    }

    /// Points of every dynamic body against every other body's surface.
    pub fn contacts(&self) -> Vec<BodyContact> {
        let cutoff = self.config.contact_cutoff();
        let mut out = Vec::new();
        let mut scratch = Vec::new();
        for (a, body_a) in self.bodies.iter().enumerate() {
            if !body_a.dynamic {
                continue;
            }
            let pose_a = body_a.pose();
            let box_a = body_a.world_aabb(body_a.part.aabb(), 0.0);
            for (b, body_b) in self.bodies.iter().enumerate() {
                let Some(collider) = body_b.collider else { continue };
                if a == b || !box_a.intersects(&body_b.world_aabb(collider.aabb(), cutoff)) {
                    continue;
                }
                scratch.clear();
                contacts_against(
                    body_a.part.points(),
                    &pose_a,
                    collider,
                    &body_b.pose(),
                    self.config.thickness,
                    self.config.ka,
                    &mut scratch,
                );
                out.extend(scratch.iter().map(|&contact| BodyContact { a, b, contact }));
            }
        }
        out
    }

    fn dof_map(&self) -> Vec<Option<usize>> {
        let mut next = 0;
        self.bodies
            .iter()
            .map(|b| {
                b.dynamic.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    }

    fn jacobian(&self, dofs: &[Option<usize>], c: &BodyContact, dir: &Vector3<f64>) -> Jacobian {
        let mut j = [(usize::MAX, Vector6::zeros()); 2];
        let p = c.contact.point.coords;
        if let Some(k) = dofs[c.a] {
            let r = p - self.bodies[c.a].com;
            j[0] = (k, Vector6::new(dir.x, dir.y, dir.z, 0.0, 0.0, 0.0));
            j[0].1.fixed_rows_mut::<3>(3).copy_from(&r.cross(dir));
        }
        if let Some(k) = dofs[c.b] {
            let r = p - self.bodies[c.b].com;
            let rn = r.cross(dir);
            j[1] = (k, -Vector6::new(dir.x, dir.y, dir.z, rn.x, rn.y, rn.z));
        }
        j
    }

    fn velocity_along(&self, u: &DVector<f64>, j: &Jacobian) -> f64 {
        j.iter()
            .filter(|(k, _)| *k != usize::MAX)
            .map(|(k, v)| v.dot(&u.fixed_rows::<6>(6 * k)))
            .sum()
    }

    fn current_velocity(&self, dofs: &[Option<usize>], n: usize) -> DVector<f64> {
        let mut u = DVector::zeros(n);
        for (i, b) in self.bodies.iter().enumerate() {
            if let Some(k) = dofs[i] {
                u.fixed_rows_mut::<3>(6 * k).copy_from(&b.linear);
                u.fixed_rows_mut::<3>(6 * k + 3).copy_from(&b.angular);
            }
        }
        u
    }

    /// Advances all dynamic bodies by `h` using the given contact set.
    pub fn step_with(&mut self, contacts: &[BodyContact], h: f64) -> Result<StepStats> {
        let cfg = self.config;
        let dofs = self.dof_map();
        let nd = dofs.iter().flatten().count();
        let n = 6 * nd;
        let mut stats = StepStats {
            contacts: contacts.len(),
            max_depth: contacts.iter().map(|c| c.contact.depth).fold(0.0, f64::max),
            loaded: false,
        };
        if n == 0 {
            return Ok(stats);
        }
        let u0 = self.current_velocity(&dofs, n);

        let mut mass = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        let gravity = cfg.gravity();
        for (i, b) in self.bodies.iter().enumerate() {
            let Some(k) = dofs[i] else { continue };
            let o = 6 * k;
            mass.view_mut((o, o), (3, 3)).copy_from(&(Matrix3::identity() * b.mass));
            mass.view_mut((o + 3, o + 3), (3, 3)).copy_from(&b.world_inertia());
            let f = b.force + gravity * b.mass;
            rhs.fixed_rows_mut::<3>(o).copy_from(&(f * h));
            rhs.fixed_rows_mut::<3>(o + 3).copy_from(&(b.torque * h));
        }
        rhs += &mass * &u0;

        // per-contact terms fixed at the start of the step
        struct Row {
            j: Jacobian,
            depth: f64,
            kd: f64,
        }
        let mut rows = Vec::with_capacity(contacts.len());
        let mut friction = DMatrix::zeros(n, n);
        for c in contacts {
            let j = self.jacobian(&dofs, c, &c.contact.normal);
            let vn = self.velocity_along(&u0, &j);
            let kd = if vn > 0.0 { cfg.kd * (1.0 - cfg.restitution) } else { cfg.kd };
            if cfg.friction_enabled() {
                let fn_est = (cfg.ke * c.contact.depth - kd * vn).max(0.0);
                let (t1, t2) = tangents(&c.contact.normal);
                let j1 = self.jacobian(&dofs, c, &t1);
                let j2 = self.jacobian(&dofs, c, &t2);
                let vt = self.velocity_along(&u0, &j1).hypot(self.velocity_along(&u0, &j2));
                let coeff = if vt > 0.0 { cfg.kf.min(cfg.mu * fn_est / vt) } else { cfg.kf };
                if fn_est > 0.0 {
                    add_outer(&mut friction, &j1, h * coeff);
                    add_outer(&mut friction, &j2, h * coeff);
                }
            }
            rows.push(Row {
                j,
                depth: c.contact.depth,
                kd,
            });
        }

        let mut active = vec![true; rows.len()];
        let mut u = u0.clone();
        for _ in 0..MAX_ACTIVE_SET_PASSES {
            let mut a = &mass + &friction;
            let mut b = rhs.clone();
            for (row, _) in rows.iter().zip(&active).filter(|(_, on)| **on) {
                add_outer(&mut a, &row.j, h * (h * cfg.ke + row.kd));
                for (k, v) in row.j.iter().filter(|(k, _)| *k != usize::MAX) {
                    let mut seg = b.fixed_rows_mut::<6>(6 * k);
                    seg += v * (h * cfg.ke * row.depth);
                }
            }
            u = match a.clone().cholesky() {
                Some(ch) => ch.solve(&b),
                None => a.lu().solve(&b).ok_or(Error::SimulationDiverged { substep: 0, step: None })?,
            };
            let mut changed = false;
            for (row, on) in rows.iter().zip(active.iter_mut()) {
                if !*on || row.depth < 0.0 {
                    continue;
                }
                let vn = self.velocity_along(&u, &row.j);
                let lambda = cfg.ke * (row.depth - h * vn) - row.kd * vn;
                if lambda < 0.0 {
                    *on = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        stats.loaded = active.iter().any(|on| *on);

        for (i, body) in self.bodies.iter_mut().enumerate() {
            let Some(k) = dofs[i] else { continue };
            body.linear = u.fixed_rows::<3>(6 * k).into();
            body.angular = u.fixed_rows::<3>(6 * k + 3).into();
            body.com += body.linear * h;
            body.rotation = UnitQuaternion::from_scaled_axis(body.angular * h) * body.rotation;
            body.rotation.renormalize();
        }
        if self.bodies.iter().any(|b| {
            !(b.com.iter().all(|x| x.is_finite())
                && b.linear.iter().all(|x| x.is_finite())
                && b.angular.iter().all(|x| x.is_finite())
                && b.rotation.coords.iter().all(|x| x.is_finite()))
        }) {
            return Err(Error::SimulationDiverged { substep: 0, step: None });
        }
        Ok(stats)
    }

    pub fn step(&mut self, h: f64) -> Result<StepStats> {
        let contacts = self.contacts();
        self.step_with(&contacts, h)
    }
}

fn add_outer(a: &mut DMatrix<f64>, j: &Jacobian, scale: f64) {
    for (ki, vi) in j.iter().filter(|(k, _)| *k != usize::MAX) {
        for (kj, vj) in j.iter().filter(|(k, _)| *k != usize::MAX) {
            let mut block = a.view_mut((6 * ki, 6 * kj), (6, 6));
            block += vi * vj.transpose() * scale;
        }
    }
}

fn tangents(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let t1 = n.cross(&helper).normalize();
    (t1, n.cross(&t1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxSolid;

    #[test]
    fn free_body_moves_ballistically() {
        let mesh = BoxSolid::cuboid([1.0; 3]).mesh().unwrap();
        let part = PartGeometry::new(0, mesh.clone(), mesh.vertices.clone()).unwrap();
        let mut world = World::new(SimConfig::default());
        let i = world.add(Body::new(&part, None, &Pose::identity(), true, 1.0));
        world.bodies[i].linear = Vector3::new(1.0, 0.0, 0.0);
        for _ in 0..10 {
            world.step(0.1).unwrap();
        }
        assert!((world.bodies[i].pose().translation().x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mass_of_unit_cube() {
        let mesh = BoxSolid::cuboid([1.0; 3]).mesh().unwrap();
        let part = PartGeometry::new(0, mesh.clone(), mesh.vertices.clone()).unwrap();
        let (m, inertia) = mass_properties(&part, 2.0);
        assert!((m - 2.0).abs() < 1e-12);
        assert!(inertia.symmetric_eigenvalues().min() > 0.0);
    }
}
