use std::collections::HashSet;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{overlaps, ObjectId, ObjectInstance, Room, Scene, ShapeKind, MAX_REFLECTIVITY, MIN_REFLECTIVITY};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};

/// Placement attempts per object before it is dropped.
pub const MAX_PLACEMENT_ATTEMPTS: u32 = 1_000;

/// Classes mounted above the floor rather than resting on it.
pub const WALL_MOUNTED: [&str; 3] = ["Shelf", "Window", "Monitor"];

const MOUNT_HEIGHT: (f64, f64) = (0.8, 2.0);

/// Closed interval `[min, max]`, written as a two-element array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub const fn new(min: f64, max: f64) -> Self {
        Interval { min, max }
    }

    pub const fn fixed(v: f64) -> Self {
        Interval { min: v, max: v }
    }

    fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min <= self.max
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.min == self.max {
            // Keep the stream position independent of range width.
            let _: f64 = rng.random();
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }
}

impl From<[f64; 2]> for Interval {
    fn from(a: [f64; 2]) -> Self {
        Interval::new(a[0], a[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.min, i.max]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub label: String,
    /// Inclusive `[min, max]` instance count per scene.
    pub count: [u32; 2],
    pub shape: ShapeKind,
    pub length: Interval,
    pub width: Interval,
    pub height: Interval,
    #[serde(default = "default_reflectivity")]
    pub reflectivity: Interval,
}

fn default_reflectivity() -> Interval {
    Interval::new(0.2, 0.9)
}

/// Keys missing from a config file take the `Default` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub room_width: Interval,
    pub room_depth: Interval,
    pub room_height: Interval,
    pub placement_tolerance: f64,
    /// Radius of a floor disc around the room centre kept free of objects (robot lane).
    pub clear_radius: f64,
    pub wall_reflectivity: f64,
    pub taxonomy: Vec<String>,
    pub classes: Vec<ClassSpec>,
}

fn default_wall_reflectivity() -> f64 {
    0.6
}

/// The 20 indoor classes used by default. Labels never contain whitespace so
/// they can be written to label files verbatim.
pub fn default_taxonomy() -> Vec<String> {
    [
        "Bed",
        "Sofa",
        "Couch",
        "Table",
        "Chair",
        "Stairs",
        "Cabinet",
        "Shelf",
        "Box",
        "Oven",
        "Microwave_oven",
        "Dishwasher",
        "Sink",
        "Person",
        "Door",
        "Window",
        "Lamp",
        "Desk",
        "Monitor",
        "Trashcan",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

impl Default for SceneConfig {
    fn default() -> Self {
        use ShapeKind::*;
        let spec = |label: &str, count: [u32; 2], shape, l: [f64; 2], w: [f64; 2], h: [f64; 2]| ClassSpec {
            label: label.into(),
            count,
            shape,
            length: l.into(),
            width: w.into(),
            height: h.into(),
            reflectivity: default_reflectivity(),
        };
        SceneConfig {
            room_width: Interval::new(7.0, 12.0),
            room_depth: Interval::new(6.0, 10.0),
            room_height: Interval::new(2.6, 3.2),
            placement_tolerance: 0.0,
            clear_radius: 1.0,
            wall_reflectivity: default_wall_reflectivity(),
            taxonomy: default_taxonomy(),
            classes: vec![
                spec("Bed", [0, 1], Box, [1.9, 2.1], [0.9, 1.6], [0.4, 0.6]),
                spec("Sofa", [0, 1], Sofa, [1.6, 2.2], [0.8, 1.0], [0.7, 0.9]),
                spec("Couch", [0, 1], Sofa, [1.4, 2.0], [0.8, 1.0], [0.7, 0.9]),
                spec("Table", [1, 2], Table, [1.0, 1.8], [0.6, 1.0], [0.7, 0.8]),
                spec("Chair", [1, 4], Chair, [0.4, 0.5], [0.4, 0.5], [0.8, 1.0]),
                spec("Stairs", [0, 1], Stairs, [1.0, 2.0], [0.8, 1.2], [0.5, 1.0]),
                spec("Cabinet", [0, 2], Box, [0.5, 1.2], [0.4, 0.6], [0.8, 2.0]),
                spec("Shelf", [0, 2], Box, [0.6, 1.2], [0.25, 0.4], [0.3, 0.6]),
                spec("Box", [0, 3], Box, [0.3, 0.6], [0.3, 0.6], [0.3, 0.6]),
                spec("Oven", [0, 1], Box, [0.55, 0.65], [0.55, 0.65], [0.8, 0.9]),
                spec("Microwave_oven", [0, 1], Box, [0.45, 0.55], [0.3, 0.4], [0.25, 0.35]),
                spec("Dishwasher", [0, 1], Box, [0.58, 0.62], [0.58, 0.62], [0.8, 0.87]),
                spec("Sink", [0, 1], Box, [0.5, 0.8], [0.4, 0.6], [0.8, 0.9]),
                spec("Person", [0, 2], Cylinder, [0.35, 0.5], [0.35, 0.5], [1.5, 1.9]),
                spec("Door", [0, 1], Box, [0.8, 1.0], [0.04, 0.06], [2.0, 2.1]),
                spec("Window", [0, 2], Box, [0.8, 1.5], [0.04, 0.08], [0.5, 0.8]),
                spec("Lamp", [0, 2], Sphere, [0.3, 0.5], [0.3, 0.5], [0.3, 0.5]),
                spec("Desk", [0, 2], Table, [1.0, 1.6], [0.5, 0.8], [0.7, 0.78]),
                spec("Monitor", [0, 2], Box, [0.5, 0.7], [0.05, 0.2], [0.3, 0.45]),
                spec("Trashcan", [0, 2], Cylinder, [0.25, 0.4], [0.25, 0.4], [0.4, 0.7]),
            ],
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, i) in [("room_width", &self.room_width), ("room_depth", &self.room_depth), ("room_height", &self.room_height)]
        {
            if !i.is_valid() || i.min <= 0.0 {
                return Err(Error::invalid(format!("{name} range [{}, {}] must be positive with min <= max", i.min, i.max)));
            }
        }
        if !(self.placement_tolerance >= 0.0 && self.placement_tolerance.is_finite()) {
            return Err(Error::invalid("placement_tolerance must be a non-negative number"));
        }
        if !(self.clear_radius >= 0.0 && self.clear_radius.is_finite()) {
            return Err(Error::invalid("clear_radius must be a non-negative number"));
        }
        if !(MIN_REFLECTIVITY..=MAX_REFLECTIVITY).contains(&self.wall_reflectivity) {
            return Err(Error::invalid("wall_reflectivity outside [0.05, 1]"));
        }
        if self.taxonomy.is_empty() {
            return Err(Error::invalid("taxonomy must not be empty"));
        }
        let mut labels = HashSet::new();
        for t in &self.taxonomy {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!("taxonomy label {t:?} must be non-empty without whitespace")));
            }
            if !labels.insert(t.as_str()) {
                return Err(Error::invalid(format!("taxonomy label {t:?} listed twice")));
            }
        }
        for c in &self.classes {
            if !labels.contains(c.label.as_str()) {
                return Err(Error::Taxonomy { label: c.label.clone() });
            }
            if c.count[0] > c.count[1] {
                return Err(Error::invalid(format!("{}: count range {:?} has min > max", c.label, c.count)));
            }
            for (name, i) in [("length", &c.length), ("width", &c.width), ("height", &c.height)] {
                if !i.is_valid() || i.min <= 0.0 {
                    return Err(Error::invalid(format!("{}: {name} range must be positive with min <= max", c.label)));
                }
            }
            let r = &c.reflectivity;
            if !r.is_valid() || r.min < MIN_REFLECTIVITY || r.max > MAX_REFLECTIVITY {
                return Err(Error::invalid(format!("{}: reflectivity range outside [0.05, 1]", c.label)));
            }
        }
        Ok(())
    }
}

/// An object the generator could not place.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub class_label: String,
    /// Index of the instance within its class request.
    pub instance: u32,
    pub attempts: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub requested: u32,
    pub placed: u32,
    pub drops: Vec<DropRecord>,
}

/// Procedurally generates a room and its furniture.
///
/// The random source is ChaCha8 seeded through `seed_from_u64`, so a given
/// `(config, seed)` reproduces the same scene on every platform. Draw order:
/// room width, depth, height; then for each class in config order its count,
/// and per placement attempt length, width, height, yaw, x, y, mount height
/// (wall-mounted classes only) and reflectivity.
pub fn generate_scene(config: &SceneConfig, seed: u64) -> Result<(Scene, GenerationLog)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut room =
        Room::new(config.room_width.sample(&mut rng), config.room_depth.sample(&mut rng), config.room_height.sample(&mut rng));
    room.wall_reflectivity = config.wall_reflectivity;
    let room_bounds = room.bounds();

    let mut log = GenerationLog::default();
    let mut objects: Vec<ObjectInstance> = Vec::new();
    let mut placed_bounds: Vec<Aabb> = Vec::new();
    let mut next_id = 1u32;

    for class in &config.classes {
        let count =
            if class.count[0] == class.count[1] { class.count[0] } else { rng.random_range(class.count[0]..=class.count[1]) };
        let mounted = WALL_MOUNTED.contains(&class.label.as_str());
        for instance in 0..count {
            log.requested += 1;
            let mut placed = false;
            for _ in 0..MAX_PLACEMENT_ATTEMPTS {
                let length = class.length.sample(&mut rng);
                let width = class.width.sample(&mut rng);
                let height = class.height.sample(&mut rng);
                let yaw = rng.random_range(0.0..TAU);
                let x = rng.random_range(room_bounds.min.x..=room_bounds.max.x);
                let y = rng.random_range(room_bounds.min.y..=room_bounds.max.y);
                let base = if mounted { rng.random_range(MOUNT_HEIGHT.0..=MOUNT_HEIGHT.1) } else { 0.0 };
                let reflectivity = class.reflectivity.sample(&mut rng);

                let primitive = class.shape.build(length, width, height)?;
                let local = primitive.local_bounds();
                let candidate = ObjectInstance {
                    id: ObjectId(next_id),
                    class_label: class.label.clone(),
                    translation: Vec3::new(x, y, base - local.min.z),
                    yaw,
                    primitive,
                    reflectivity,
                };
                let b = candidate.world_bounds();
                let in_room = b.min.x >= room_bounds.min.x
                    && b.max.x <= room_bounds.max.x
                    && b.min.y >= room_bounds.min.y
                    && b.max.y <= room_bounds.max.y
                    && b.max.z <= room_bounds.max.z;
                if !in_room || footprint_hits_disc(&b, config.clear_radius) {
                    continue;
                }
                if placed_bounds.iter().any(|p| overlaps(p, &b, config.placement_tolerance)) {
                    continue;
                }
                placed_bounds.push(b);
                objects.push(candidate);
                next_id += 1;
                placed = true;
                break;
            }
            if placed {
                log.placed += 1;
            } else {
                log.drops.push(DropRecord { class_label: class.label.clone(), instance, attempts: MAX_PLACEMENT_ATTEMPTS });
            }
        }
    }

    let scene = Scene { seed, room, overlap_tolerance: config.placement_tolerance, taxonomy: config.taxonomy.clone(), objects };
    Ok((scene, log))
}

fn footprint_hits_disc(b: &Aabb, radius: f64) -> bool {
    if radius <= 0.0 {
        return false;
    }
    let cx = 0.0f64.clamp(b.min.x, b.max.x);
    let cy = 0.0f64.clamp(b.min.y, b.max.y);
    cx * cx + cy * cy < radius * radius
}
