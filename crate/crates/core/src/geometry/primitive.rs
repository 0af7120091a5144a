use serde::{Deserialize, Serialize};

use super::bvh::Bvh;
use super::{Aabb, Ray, Vec3};
use crate::error::{Error, Result};

/// Hits closer than this are rejected as self-intersections.
pub const T_MIN: f64 = 1e-6;

/// Negative discriminants with magnitude below this count as tangential hits.
const TANGENT_EPS: f64 = 1e-12;

/// Barycentric slack so rays through shared mesh edges never slip between triangles.
const BARY_EPS: f64 = 1e-12;

/// Surface candidate in an object's local frame; `normal` is the outward surface normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalHit {
    pub t: f64,
    pub normal: Vec3,
}

/// Geometry of an object, expressed in its own local frame and centred on the origin
/// (meshes may be anywhere in their frame).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    Box {
        half_extents: Vec3,
    },
    Sphere {
        radius: f64,
    },
    /// Finite capped cylinder along local z.
    Cylinder {
        radius: f64,
        half_height: f64,
    },
    Mesh(TriangleMesh),
}

impl Primitive {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be finite and strictly positive, got {v}")))
            }
        };
        match self {
            Primitive::Box { half_extents: h } => {
                positive(h.x, "box half-extent x")?;
                positive(h.y, "box half-extent y")?;
                positive(h.z, "box half-extent z")
            }
            Primitive::Sphere { radius } => positive(*radius, "sphere radius"),
            Primitive::Cylinder { radius, half_height } => {
                positive(*radius, "cylinder radius")?;
                positive(*half_height, "cylinder half-height")
            }
            // Meshes are validated on construction.
            Primitive::Mesh(_) => Ok(()),
        }
    }

    /// Tight axis-aligned bounds in the local frame.
    pub fn local_bounds(&self) -> Aabb {
        match self {
            Primitive::Box { half_extents } => Aabb::new(-*half_extents, *half_extents),
            Primitive::Sphere { radius } => Aabb::new(Vec3::splat(-radius), Vec3::splat(*radius)),
            Primitive::Cylinder { radius, half_height } => {
                let h = Vec3::new(*radius, *radius, *half_height);
                Aabb::new(-h, h)
            }
            Primitive::Mesh(m) => m.bounds(),
        }
    }

    /// Nearest surface crossing with `t > T_MIN`, skipping validation.
    #[inline]
    pub fn intersect_local(&self, ray: &Ray) -> Option<LocalHit> {
        match self {
            Primitive::Box { half_extents } => intersect_box(ray, *half_extents),
            Primitive::Sphere { radius } => intersect_sphere(ray, *radius),
            Primitive::Cylinder { radius, half_height } => intersect_cylinder(ray, *radius, *half_height),
            Primitive::Mesh(m) => m.intersect(ray, f64::INFINITY),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Primitive::Box { .. } => "box",
            Primitive::Sphere { .. } => "sphere",
            Primitive::Cylinder { .. } => "cylinder",
            Primitive::Mesh(_) => "mesh",
        }
    }
}

/// Smallest `t > T_MIN` at which a local-frame ray meets the primitive's surface.
pub fn intersect_primitive(local_ray: &Ray, primitive: &Primitive) -> Result<Option<f64>> {
    primitive.validate()?;
    Ok(primitive.intersect_local(local_ray).map(|h| h.t))
}

fn axis_unit(axis: usize, sign: f64) -> Vec3 {
    match axis {
        0 => Vec3::new(sign, 0.0, 0.0),
        1 => Vec3::new(0.0, sign, 0.0),
        _ => Vec3::new(0.0, 0.0, sign),
    }
}

/// Slab method. The reported face is the slab that produced the chosen `t`;
/// ties keep the earliest axis in x, y, z order.
fn intersect_box(ray: &Ray, half: Vec3) -> Option<LocalHit> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let (mut near_axis, mut near_sign) = (0usize, -1.0);
    let (mut far_axis, mut far_sign) = (0usize, 1.0);
    for axis in 0..3 {
        let o = ray.origin[axis];
        let d = ray.direction[axis];
        let h = half[axis];
        if d == 0.0 {
            if o.abs() > h {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d;
        let t_lo = (-h - o) * inv;
        let t_hi = (h - o) * inv;
        let (t_in, t_out, in_sign) = if d > 0.0 { (t_lo, t_hi, -1.0) } else { (t_hi, t_lo, 1.0) };
        if t_in > t_near {
            t_near = t_in;
            near_axis = axis;
            near_sign = in_sign;
        }
        if t_out < t_far {
            t_far = t_out;
            far_axis = axis;
            far_sign = -in_sign;
        }
    }
    if t_near > t_far {
        return None;
    }
    if t_near > T_MIN {
        Some(LocalHit { t: t_near, normal: axis_unit(near_axis, near_sign) })
    } else if t_far > T_MIN {
        Some(LocalHit { t: t_far, normal: axis_unit(far_axis, far_sign) })
    } else {
        None
    }
}

/// Roots of `t² + 2·b·t + c = 0` in ascending order, with tangential slack.
#[inline]
fn half_b_roots(b: f64, c: f64) -> Option<(f64, f64)> {
    let mut disc = b * b - c;
    if disc < 0.0 {
        if disc > -TANGENT_EPS {
            disc = 0.0;
        } else {
            return None;
        }
    }
    let s = disc.sqrt();
    // Stable form: avoid cancellation in the smaller-magnitude root.
    let q = if b > 0.0 { -b - s } else { -b + s };
    if q == 0.0 {
        return Some((0.0, 0.0));
    }
    let (r0, r1) = (q, c / q);
    Some(if r0 <= r1 { (r0, r1) } else { (r1, r0) })
}

fn intersect_sphere(ray: &Ray, radius: f64) -> Option<LocalHit> {
    let o = ray.origin;
    let d = ray.direction;
    let a = d.norm_squared();
    let b = o.dot(d) / a;
    let c = (o.norm_squared() - radius * radius) / a;
    let (t0, t1) = half_b_roots(b, c)?;
    let t = if t0 > T_MIN {
        t0
    } else if t1 > T_MIN {
        t1
    } else {
        return None;
    };
    let normal = (ray.at(t) / radius).normalized().unwrap_or(Vec3::Z);
    Some(LocalHit { t, normal })
}

fn intersect_cylinder(ray: &Ray, radius: f64, half_height: f64) -> Option<LocalHit> {
    let o = ray.origin;
    let d = ray.direction;
    let mut best: Option<LocalHit> = None;
    let mut consider = |t: f64, normal: Vec3| {
        if t > T_MIN && best.is_none_or(|b| t < b.t) {
            best = Some(LocalHit { t, normal });
        }
    };

    let a = d.x * d.x + d.y * d.y;
    if a > 0.0 {
        let b = (o.x * d.x + o.y * d.y) / a;
        let c = (o.x * o.x + o.y * o.y - radius * radius) / a;
        if let Some((t0, t1)) = half_b_roots(b, c) {
            for t in [t0, t1] {
                let z = o.z + t * d.z;
                if z.abs() <= half_height {
                    let p = ray.at(t);
                    let n = Vec3::new(p.x, p.y, 0.0).normalized().unwrap_or(Vec3::X);
                    consider(t, n);
                }
            }
        }
    }
    if d.z != 0.0 {
        let r2 = radius * radius;
        for sign in [-1.0, 1.0] {
            let t = (sign * half_height - o.z) / d.z;
            let x = o.x + t * d.x;
            let y = o.y + t * d.y;
            if x * x + y * y <= r2 {
                consider(t, Vec3::new(0.0, 0.0, sign));
            }
        }
    }
    best
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MeshData {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
}

/// Indexed triangle mesh with a bounding-volume hierarchy over its triangles.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "MeshData", into = "MeshData")]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    bvh: Bvh,
}

impl PartialEq for TriangleMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.triangles == other.triangles
    }
}

impl TryFrom<MeshData> for TriangleMesh {
    type Error = Error;
    fn try_from(d: MeshData) -> Result<Self> {
        TriangleMesh::new(d.vertices, d.triangles)
    }
}

impl From<TriangleMesh> for MeshData {
    fn from(m: TriangleMesh) -> Self {
        MeshData { vertices: m.vertices, triangles: m.triangles }
    }
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<TriangleMesh> {
        if triangles.is_empty() {
            return Err(Error::invalid("mesh must contain at least one triangle"));
        }
        if let Some(v) = vertices.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("mesh vertex {v:?} is not finite")));
        }
        let n = vertices.len() as u32;
        if let Some((i, tri)) = triangles.iter().enumerate().find(|(_, t)| t.iter().any(|&k| k >= n)) {
            return Err(Error::invalid(format!("mesh triangle {i} {tri:?} indexes past {n} vertices")));
        }
        let tri_bounds: Vec<Aabb> =
            triangles.iter().map(|t| Aabb::from_points(t.iter().map(|&k| vertices[k as usize]))).collect();
        let bvh = Bvh::build(&tri_bounds);
        Ok(TriangleMesh { vertices, triangles, bvh })
    }

    /// Closed box mesh spanning `min..max`, 12 outward-wound triangles.
    pub fn cuboid(min: Vec3, max: Vec3) -> Result<TriangleMesh> {
        let mut m = MeshBuilder::default();
        m.add_cuboid(min, max);
        m.build()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let t = self.triangles[i];
        [self.vertices[t[0] as usize], self.vertices[t[1] as usize], self.vertices[t[2] as usize]]
    }

    pub fn bounds(&self) -> Aabb {
        self.bvh.bounds()
    }

    pub fn bvh_encloses_triangles(&self) -> bool {
        let tri_bounds: Vec<Aabb> = (0..self.triangles.len()).map(|i| Aabb::from_points(self.triangle(i))).collect();
        self.bvh.encloses_all(&tri_bounds)
    }

    pub fn intersect(&self, ray: &Ray, t_max: f64) -> Option<LocalHit> {
        let inv = ray.inv_direction();
        let found = self
            .bvh
            .closest(ray.origin, inv, T_MIN, t_max, |i, _| intersect_triangle(ray, self.triangle(i as usize)).map(|(t, _)| t));
        found.map(|(i, t)| {
            let [a, b, c] = self.triangle(i as usize);
            LocalHit { t, normal: (b - a).cross(c - a).normalized().unwrap_or(Vec3::Z) }
        })
    }
}

/// Two-sided Möller–Trumbore. Returns `(t, unnormalised geometric normal)`.
#[inline]
pub(crate) fn intersect_triangle(ray: &Ray, [a, b, c]: [Vec3; 3]) -> Option<(f64, Vec3)> {
    let e1 = b - a;
    let e2 = c - a;
    let p = ray.direction.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - a;
    let u = s.dot(p) * inv;
    if !(-BARY_EPS..=1.0 + BARY_EPS).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = ray.direction.dot(q) * inv;
    if v < -BARY_EPS || u + v > 1.0 + BARY_EPS {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t > T_MIN).then(|| (t, e1.cross(e2)))
}

/// Accumulates closed cuboids into a single mesh; used for procedural furniture.
#[derive(Default)]
pub struct MeshBuilder {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
}

impl MeshBuilder {
    pub fn add_cuboid(&mut self, min: Vec3, max: Vec3) -> &mut Self {
        let base = self.vertices.len() as u32;
        for i in 0..8u32 {
            self.vertices.push(Vec3::new(
                if i & 1 == 0 { min.x } else { max.x },
                if i & 2 == 0 { min.y } else { max.y },
                if i & 4 == 0 { min.z } else { max.z },
            ));
        }
        const FACES: [[u32; 4]; 6] = [
            [0, 2, 3, 1], // -z
            [4, 5, 7, 6], // +z
            [0, 1, 5, 4], // -y
            [2, 6, 7, 3], // +y
            [0, 4, 6, 2], // -x
            [1, 3, 7, 5], // +x
        ];
        for f in FACES {
            self.triangles.push([base + f[0], base + f[1], base + f[2]]);
            self.triangles.push([base + f[0], base + f[2], base + f[3]]);
        }
        self
    }

    pub fn build(self) -> Result<TriangleMesh> {
        TriangleMesh::new(self.vertices, self.triangles)
    }
}
