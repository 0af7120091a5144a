//! Independent reference implementations used by the integration tests.
//!
//! None of these call the analytic routines they are compared against: ray
//! hits come from marching signed-distance or winding-number inside tests,
//! IoU from Monte-Carlo sampling, BEV channels from a per-cell scan, and
//! matching optima from exhaustive enumeration.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roomcast::annotate::LabeledBox;
use roomcast::geometry::{Primitive, TriangleMesh, Vec3};

pub const MARCH_STEP: f64 = 1e-5;
/// Below this distance to the surface the marcher switches to fixed steps.
pub const NEAR: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_unit(r: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Signed distance (box, sphere, cylinder) or unsigned distance plus a
/// winding-number inside test (mesh), evaluated in the primitive's frame.
pub struct Implicit<'a> {
    prim: &'a Primitive,
}

impl<'a> Implicit<'a> {
    pub fn new(prim: &'a Primitive) -> Self {
        Implicit { prim }
    }

    /// Distance from `p` to the surface; never overestimates.
    pub fn distance(&self, p: Vec3) -> f64 {
        match self.prim {
            Primitive::Box { half_extents: h } => {
                let q = Vec3::new(p.x.abs() - h.x, p.y.abs() - h.y, p.z.abs() - h.z);
                let outside = Vec3::new(q.x.max(0.0), q.y.max(0.0), q.z.max(0.0)).norm();
                (outside + q.x.max(q.y).max(q.z).min(0.0)).abs()
            }
            Primitive::Sphere { radius } => (p.norm() - radius).abs(),
            Primitive::Cylinder { radius, half_height } => {
                let dx = (p.x * p.x + p.y * p.y).sqrt() - radius;
                let dz = p.z.abs() - half_height;
                let outside = (dx.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt();
                (outside + dx.max(dz).min(0.0)).abs()
            }
            Primitive::Mesh(m) => (0..m.triangles().len())
                .map(|i| {
                    let [a, b, c] = m.triangle(i);
                    point_triangle_distance(p, a, b, c)
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn inside(&self, p: Vec3) -> bool {
        match self.prim {
            Primitive::Box { half_extents: h } => p.x.abs() < h.x && p.y.abs() < h.y && p.z.abs() < h.z,
            Primitive::Sphere { radius } => p.norm() < *radius,
            Primitive::Cylinder { radius, half_height } => p.x * p.x + p.y * p.y < radius * radius && p.z.abs() < *half_height,
            Primitive::Mesh(m) => winding_number(m, p).abs() > 0.5,
        }
    }
}

/// Result of marching a ray against one implicit surface.
#[derive(Clone, Copy, Debug)]
pub struct MarchResult {
    /// First inside/outside change, if any, located to within `MARCH_STEP`.
    pub hit: Option<f64>,
    /// Smallest surface distance seen before the hit (or over the whole ray).
    pub closest_approach: f64,
}

/// Sphere-traces the ray, then walks `MARCH_STEP` increments whenever it is
/// within `NEAR` of the surface, reporting the first change of the inside test.
pub fn march(imp: &Implicit, origin: Vec3, dir: Vec3, t_start: f64, t_max: f64) -> MarchResult {
    let start_inside = imp.inside(origin + dir * t_start);
    let mut t = t_start;
    let mut closest = f64::INFINITY;
    while t <= t_max {
        let p = origin + dir * t;
        let d = imp.distance(p);
        closest = closest.min(d);
        if d > NEAR {
            t += d - 0.5 * NEAR;
            continue;
        }
        let next = t + MARCH_STEP;
        if imp.inside(origin + dir * next) != start_inside {
            return MarchResult { hit: Some(t + 0.5 * MARCH_STEP), closest_approach: closest };
        }
        t = next;
    }
    MarchResult { hit: None, closest_approach: closest }
}

pub fn point_triangle_distance(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    // Closest point by Voronoi regions of the triangle.
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (p - (a + ab * v)).norm();
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (p - (a + ac * w)).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + (c - b) * w)).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (p - (a + ab * v + ac * w)).norm()
}

/// Generalised winding number from signed solid angles (Van Oosterom–Strackee).
pub fn winding_number(m: &TriangleMesh, p: Vec3) -> f64 {
    let mut total = 0.0;
    for i in 0..m.triangles().len() {
        let [a, b, c] = m.triangle(i);
        let (a, b, c) = (a - p, b - p, c - p);
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(b.cross(c));
        let den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
        total += 2.0 * num.atan2(den);
    }
    total / (4.0 * std::f64::consts::PI)
}

/// Closed, outward-wound, star-shaped mesh: a latitude/longitude sphere whose
/// vertex radii are jittered in `[r_min, r_max]`.
pub fn star_mesh(r: &mut impl Rng, rings: usize, segments: usize, r_min: f64, r_max: f64) -> TriangleMesh {
    use std::f64::consts::PI;
    let mut vertices = vec![Vec3::new(0.0, 0.0, r.random_range(r_min..r_max))];
    for i in 1..rings {
        let theta = PI * i as f64 / rings as f64;
        for j in 0..segments {
            let phi = 2.0 * PI * j as f64 / segments as f64;
            let rad = r.random_range(r_min..r_max);
            vertices.push(Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()) * rad);
        }
    }
    vertices.push(Vec3::new(0.0, 0.0, -r.random_range(r_min..r_max)));
    let south = (vertices.len() - 1) as u32;
    let ring = |i: usize, j: usize| (1 + (i - 1) * segments + j % segments) as u32;
    let mut tris = Vec::new();
    for j in 0..segments {
        tris.push([0, ring(1, j), ring(1, j + 1)]);
        tris.push([south, ring(rings - 1, j + 1), ring(rings - 1, j)]);
    }
    for i in 1..rings - 1 {
        for j in 0..segments {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            tris.push([a, c, d]);
            tris.push([a, d, b]);
        }
    }
    TriangleMesh::new(vertices, tris).expect("star mesh")
}

fn footprint_contains(b: &LabeledBox, x: f64, y: f64) -> bool {
    let (s, c) = b.yaw.sin_cos();
    let dx = x - b.center.x;
    let dy = y - b.center.y;
    let lx = c * dx + s * dy;
    let ly = -s * dx + c * dy;
    lx.abs() <= b.length / 2.0 && ly.abs() <= b.width / 2.0
}

fn footprint_bounds(b: &LabeledBox) -> (f64, f64, f64, f64) {
    let (s, c) = b.yaw.sin_cos();
    let ex = (c * b.length).abs() / 2.0 + (s * b.width).abs() / 2.0;
    let ey = (s * b.length).abs() / 2.0 + (c * b.width).abs() / 2.0;
    (b.center.x - ex, b.center.x + ex, b.center.y - ey, b.center.y + ey)
}

/// Monte-Carlo IoU of the ground-plane footprints.
pub fn monte_carlo_iou_bev(a: &LabeledBox, b: &LabeledBox, samples: usize, seed: u64) -> f64 {
    let (ax0, ax1, ay0, ay1) = footprint_bounds(a);
    let (bx0, bx1, by0, by1) = footprint_bounds(b);
    let (x0, x1, y0, y1) = (ax0.min(bx0), ax1.max(bx1), ay0.min(by0), ay1.max(by1));
    let mut r = rng(seed);
    let (mut both, mut either) = (0u64, 0u64);
    for _ in 0..samples {
        let x = r.random_range(x0..x1);
        let y = r.random_range(y0..y1);
        let (ia, ib) = (footprint_contains(a, x, y), footprint_contains(b, x, y));
        both += (ia && ib) as u64;
        either += (ia || ib) as u64;
    }
    if either == 0 {
        0.0
    } else {
        both as f64 / either as f64
    }
}

/// Monte-Carlo IoU of the oriented boxes.
pub fn monte_carlo_iou_3d(a: &LabeledBox, b: &LabeledBox, samples: usize, seed: u64) -> f64 {
    let (ax0, ax1, ay0, ay1) = footprint_bounds(a);
    let (bx0, bx1, by0, by1) = footprint_bounds(b);
    let (x0, x1, y0, y1) = (ax0.min(bx0), ax1.max(bx1), ay0.min(by0), ay1.max(by1));
    let z0 = (a.center.z - a.height / 2.0).min(b.center.z - b.height / 2.0);
    let z1 = (a.center.z + a.height / 2.0).max(b.center.z + b.height / 2.0);
    let in_z = |bx: &LabeledBox, z: f64| (z - bx.center.z).abs() <= bx.height / 2.0;
    let mut r = rng(seed);
    let (mut both, mut either) = (0u64, 0u64);
    for _ in 0..samples {
        let x = r.random_range(x0..x1);
        let y = r.random_range(y0..y1);
        let z = r.random_range(z0..z1);
        let ia = in_z(a, z) && footprint_contains(a, x, y);
        let ib = in_z(b, z) && footprint_contains(b, x, y);
        both += (ia && ib) as u64;
        either += (ia || ib) as u64;
    }
    if either == 0 {
        0.0
    } else {
        both as f64 / either as f64
    }
}

pub fn random_box(r: &mut impl Rng, class: &str) -> LabeledBox {
    LabeledBox {
        class_label: class.to_string(),
        center: Vec3::new(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0), r.random_range(0.0..2.0)),
        length: r.random_range(0.2..3.0),
        width: r.random_range(0.2..3.0),
        height: r.random_range(0.2..2.0),
        yaw: r.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        score: None,
    }
}

/// A box near `a` so that pairs overlap more often than not.
pub fn nearby_box(r: &mut impl Rng, a: &LabeledBox) -> LabeledBox {
    let mut b = random_box(r, &a.class_label);
    b.center = a.center + Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-0.5..0.5));
    b.length = (a.length * r.random_range(0.5..1.5)).max(0.05);
    b.width = (a.width * r.random_range(0.5..1.5)).max(0.05);
    b.height = (a.height * r.random_range(0.5..1.5)).max(0.05);
    b
}

/// Largest total weight over all one-to-one partial assignments using only
/// admissible pairs (`weight[i][j] = Some(w)`).
pub fn best_assignment(weight: &[Vec<Option<f64>>]) -> f64 {
    fn go(i: usize, weight: &[Vec<Option<f64>>], used: &mut Vec<bool>) -> f64 {
        if i == weight.len() {
            return 0.0;
        }
        let mut best = go(i + 1, weight, used);
        for j in 0..used.len() {
            if let (false, Some(w)) = (used[j], weight[i][j]) {
                used[j] = true;
                best = best.max(w + go(i + 1, weight, used));
                used[j] = false;
            }
        }
        best
    }
    let cols = weight.first().map_or(0, |r| r.len());
    go(0, weight, &mut vec![false; cols])
}

/// Reference BEV binning: for every cell, scan every point.
pub struct NaiveBev {
    pub rows: usize,
    pub cols: usize,
    pub density: Vec<u32>,
    pub max_height: Vec<f32>,
    pub mean_intensity: Vec<f32>,
}

pub fn naive_bev(points: &[[f32; 4]], cell: f64, x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> NaiveBev {
    let cols = ((x_max - x_min) / cell).ceil() as usize;
    let rows = ((y_max - y_min) / cell).ceil() as usize;
    let mut density = vec![0u32; rows * cols];
    let mut max_height = vec![f32::NEG_INFINITY; rows * cols];
    let mut mean_intensity = vec![0f32; rows * cols];
    for row in 0..rows {
        for col in 0..cols {
            let mut n = 0u32;
            let mut sum = 0f64;
            let mut top = f32::NEG_INFINITY;
            for p in points {
                let (x, y) = (p[0] as f64, p[1] as f64);
                if !(x >= x_min && x < x_max && y >= y_min && y < y_max) {
                    continue;
                }
                let c = ((x - x_min) / cell).floor() as usize;
                let r = ((y - y_min) / cell).floor() as usize;
                if c.min(cols - 1) == col && r.min(rows - 1) == row {
                    n += 1;
                    sum += p[3] as f64;
                    top = top.max(p[2]);
                }
            }
            let k = row * cols + col;
            density[k] = n;
            max_height[k] = top;
            if n > 0 {
                mean_intensity[k] = (sum / n as f64) as f32;
            }
        }
    }
    NaiveBev { rows, cols, density, max_height, mean_intensity }
}

pub fn random_box_of(r: &mut impl Rng, classes: &[&str]) -> LabeledBox {
    let class = classes[r.random_range(0..classes.len())];
    random_box(r, class)
}
