//! Indoor scenes: a room shell populated with classed, posed objects.

mod generate;
mod shapes;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Pose, Primitive, Vec3};

pub use generate::{default_taxonomy, generate_scene, ClassSpec, DropRecord, GenerationLog, Interval, SceneConfig, WALL_MOUNTED};
pub use shapes::ShapeKind;

pub const MIN_REFLECTIVITY: f64 = 0.05;
pub const MAX_REFLECTIVITY: f64 = 1.0;

/// Slack for floating-point round-off in containment checks.
const CONTAINMENT_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u32);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Axis-aligned room. The floor is `z = 0`, centred on the origin in x and y.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    /// Whether walls, floor and ceiling are ray-cast surfaces.
    #[serde(default = "default_true")]
    pub shell: bool,
    #[serde(default = "default_wall_reflectivity")]
    pub wall_reflectivity: f64,
}

fn default_true() -> bool {
    true
}

fn default_wall_reflectivity() -> f64 {
    0.6
}

impl Room {
    pub fn new(width: f64, depth: f64, height: f64) -> Room {
        Room { width, depth, height, shell: true, wall_reflectivity: default_wall_reflectivity() }
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::new(
            Vec3::new(-self.width / 2.0, -self.depth / 2.0, 0.0),
            Vec3::new(self.width / 2.0, self.depth / 2.0, self.height),
        )
    }

    pub fn floor_area(&self) -> f64 {
        self.width * self.depth
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: ObjectId,
    pub class_label: String,
    /// World position of the local origin.
    pub translation: Vec3,
    /// Heading about the vertical axis, radians.
    pub yaw: f64,
    pub primitive: Primitive,
    pub reflectivity: f64,
}

impl ObjectInstance {
    pub fn pose(&self) -> Pose {
        Pose::from_yaw_translation(self.yaw, self.translation)
    }

    /// World-frame axis-aligned bounds of the object's oriented box.
    pub fn world_bounds(&self) -> Aabb {
        let local = self.primitive.local_bounds();
        let pose = self.pose();
        Aabb::from_points(box_corners(local).into_iter().map(|c| pose.transform_point(c)))
    }
}

pub(crate) fn box_corners(b: Aabb) -> [Vec3; 8] {
    let mut out = [Vec3::ZERO; 8];
    for (i, c) in out.iter_mut().enumerate() {
        *c = Vec3::new(
            if i & 1 == 0 { b.min.x } else { b.max.x },
            if i & 2 == 0 { b.min.y } else { b.max.y },
            if i & 4 == 0 { b.min.z } else { b.max.z },
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(with = "crate::storage::u64_compat")]
    pub seed: u64,
    pub room: Room,
    /// Allowed overlap (meters, per axis) between object world bounds.
    #[serde(default)]
    pub overlap_tolerance: f64,
    pub taxonomy: Vec<String>,
    #[serde(default)]
    pub objects: Vec<ObjectInstance>,
}

impl Scene {
    pub fn empty(room: Room, seed: u64) -> Scene {
        Scene { seed, room, overlap_tolerance: 0.0, taxonomy: default_taxonomy(), objects: Vec::new() }
    }

    pub fn object(&self, id: ObjectId) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn class_histogram(&self) -> BTreeMap<&str, usize> {
        let mut h = BTreeMap::new();
        for o in &self.objects {
            *h.entry(o.class_label.as_str()).or_insert(0) += 1;
        }
        h
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    InvalidRoom { reason: String },
    DuplicateId(ObjectId),
    UnknownClass { id: ObjectId, label: String },
    Reflectivity { id: ObjectId, value: f64 },
    InvalidPrimitive { id: ObjectId, reason: String },
    InvalidPose { id: ObjectId },
    OutOfRoom(ObjectId),
    Overlap(ObjectId, ObjectId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidRoom { reason } => write!(f, "invalid room: {reason}"),
            Violation::DuplicateId(id) => write!(f, "duplicate object id {id}"),
            Violation::UnknownClass { id, label } => write!(f, "object {id}: class {label:?} not in taxonomy"),
            Violation::Reflectivity { id, value } => {
                write!(f, "object {id}: reflectivity {value} outside [{MIN_REFLECTIVITY}, {MAX_REFLECTIVITY}]")
            }
            Violation::InvalidPrimitive { id, reason } => write!(f, "object {id}: {reason}"),
            Violation::InvalidPose { id } => write!(f, "object {id}: non-finite pose"),
            Violation::OutOfRoom(id) => write!(f, "object {id} extends outside the room"),
            Violation::Overlap(a, b) => write!(f, "objects {a} and {b} overlap"),
        }
    }
}

/// All scene invariant violations; empty iff the scene is valid.
pub fn validate_scene(scene: &Scene) -> Vec<Violation> {
    let mut out = Vec::new();
    let r = &scene.room;
    if !(r.width > 0.0 && r.depth > 0.0 && r.height > 0.0 && r.width.is_finite() && r.depth.is_finite() && r.height.is_finite()) {
        out.push(Violation::InvalidRoom {
            reason: format!("dimensions {}×{}×{} must be positive", r.width, r.depth, r.height)
        });
    }
    if !(MIN_REFLECTIVITY..=MAX_REFLECTIVITY).contains(&r.wall_reflectivity) {
        out.push(Violation::InvalidRoom { reason: format!("wall reflectivity {}", r.wall_reflectivity) });
    }
    if scene.overlap_tolerance.is_nan() || scene.overlap_tolerance < 0.0 {
        out.push(Violation::InvalidRoom { reason: "overlap tolerance must be non-negative".into() });
    }

    let taxonomy: HashSet<&str> = scene.taxonomy.iter().map(String::as_str).collect();
    let mut seen = HashSet::new();
    let mut valid_bounds: Vec<(ObjectId, Aabb)> = Vec::with_capacity(scene.objects.len());
    let room = r.bounds();
    for o in &scene.objects {
        if !seen.insert(o.id) {
            out.push(Violation::DuplicateId(o.id));
        }
        if !taxonomy.contains(o.class_label.as_str()) {
            out.push(Violation::UnknownClass { id: o.id, label: o.class_label.clone() });
        }
        if !(MIN_REFLECTIVITY..=MAX_REFLECTIVITY).contains(&o.reflectivity) {
            out.push(Violation::Reflectivity { id: o.id, value: o.reflectivity });
        }
        if let Err(e) = o.primitive.validate() {
            out.push(Violation::InvalidPrimitive { id: o.id, reason: e.to_string() });
            continue;
        }
        if !o.translation.is_finite() || !o.yaw.is_finite() {
            out.push(Violation::InvalidPose { id: o.id });
            continue;
        }
        let b = o.world_bounds();
        let inside = b.min.x >= room.min.x - CONTAINMENT_EPS
            && b.min.y >= room.min.y - CONTAINMENT_EPS
            && b.min.z >= room.min.z - CONTAINMENT_EPS
            && b.max.x <= room.max.x + CONTAINMENT_EPS
            && b.max.y <= room.max.y + CONTAINMENT_EPS
            && b.max.z <= room.max.z + CONTAINMENT_EPS;
        if !inside {
            out.push(Violation::OutOfRoom(o.id));
        }
        valid_bounds.push((o.id, b));
    }
    for i in 0..valid_bounds.len() {
        for j in i + 1..valid_bounds.len() {
            if overlaps(&valid_bounds[i].1, &valid_bounds[j].1, scene.overlap_tolerance) {
                out.push(Violation::Overlap(valid_bounds[i].0, valid_bounds[j].0));
            }
        }
    }
    out
}

/// Bounds overlap when they interpenetrate by more than `tol` along every axis.
pub(crate) fn overlaps(a: &Aabb, b: &Aabb, tol: f64) -> bool {
    let o = a.overlap(*b);
    o.x > tol && o.y > tol && o.z > tol
}
