use serde::{Deserialize, Serialize};

use super::bvh::Bvh;
use super::{to_local_frame, Aabb, Pose, Primitive, Ray, Vec3, T_MIN};
use crate::error::{Error, Result};
use crate::scene::{validate_scene, ObjectId, Scene};

/// What a ray struck: the room shell or a scene object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SurfaceId {
    Shell,
    Object(ObjectId),
}

/// Nearest return of a world ray. `normal` is unit length and faces the ray origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub surface: SurfaceId,
    pub normal: Vec3,
    pub point: Vec3,
}

#[derive(Clone, Debug)]
struct Entry {
    id: ObjectId,
    pose: Pose,
    primitive: Primitive,
    reflectivity: f64,
}

/// Read-only, validated view of a scene prepared for ray casting.
///
/// Holds a hierarchy over object world bounds; building one is the only way
/// to obtain a scene the simulator accepts.
#[derive(Clone, Debug)]
pub struct SceneIndex {
    entries: Vec<Entry>,
    bvh: Bvh,
    shell: Option<(Pose, Primitive)>,
    shell_reflectivity: f64,
}

impl SceneIndex {
    /// Validates `scene` and builds the acceleration structure.
    pub fn build(scene: &Scene) -> Result<SceneIndex> {
        let violations = validate_scene(scene);
        if !violations.is_empty() {
            let listed: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::Precondition(format!("scene failed validation: {}", listed.join("; "))));
        }
        Ok(Self::build_unchecked(scene))
    }

    /// Builds the index without running scene validation. Primitives must still be valid.
    pub fn build_unchecked(scene: &Scene) -> SceneIndex {
        let entries: Vec<Entry> = scene
            .objects
            .iter()
            .map(|o| Entry { id: o.id, pose: o.pose(), primitive: o.primitive.clone(), reflectivity: o.reflectivity })
            .collect();
        let bounds: Vec<Aabb> = scene.objects.iter().map(|o| o.world_bounds()).collect();
        let shell = scene.room.shell.then(|| {
            let r = &scene.room;
            (
                Pose::from_translation(Vec3::new(0.0, 0.0, r.height / 2.0)),
                Primitive::Box { half_extents: Vec3::new(r.width / 2.0, r.depth / 2.0, r.height / 2.0) },
            )
        });
        SceneIndex { entries, bvh: Bvh::build(&bounds), shell, shell_reflectivity: scene.room.wall_reflectivity }
    }

    pub fn object_count(&self) -> usize {
        self.entries.len()
    }

    pub fn reflectivity(&self, surface: SurfaceId) -> f64 {
        match surface {
            SurfaceId::Shell => self.shell_reflectivity,
            SurfaceId::Object(id) => self.entries.iter().find(|e| e.id == id).map_or(0.0, |e| e.reflectivity),
        }
    }

    pub(crate) fn reflectivity_of_slot(&self, surface: SurfaceId, slot: Option<usize>) -> f64 {
        match slot {
            Some(i) => self.entries[i].reflectivity,
            None => self.reflectivity(surface),
        }
    }

    /// Like [`nearest_hit`] but also reports the internal object slot of the hit.
    pub(crate) fn cast(&self, ray: &Ray, max_range: f64) -> Option<(Hit, Option<usize>)> {
        let inv = ray.inv_direction();
        let object = self.bvh.closest(ray.origin, inv, T_MIN, max_range, |i, _| {
            let e = &self.entries[i as usize];
            e.primitive.intersect_local(&to_local_frame(ray, &e.pose)).map(|h| h.t)
        });
        let shell = self.shell.as_ref().and_then(|(pose, prim)| {
            prim.intersect_local(&to_local_frame(ray, pose))
                .filter(|h| h.t <= max_range)
                .map(|h| (h.t, pose.transform_vector(h.normal)))
        });

        let (t, surface, slot, normal) = match (object, shell) {
            (Some((i, t)), shell) if shell.is_none_or(|(ts, _)| t <= ts) => {
                let e = &self.entries[i as usize];
                // Re-run the winning intersection for its normal.
                let local = e.primitive.intersect_local(&to_local_frame(ray, &e.pose))?;
                (t, SurfaceId::Object(e.id), Some(i as usize), e.pose.transform_vector(local.normal))
            }
            (_, Some((t, n))) => (t, SurfaceId::Shell, None, n),
            (None, None) => return None,
            (Some(_), None) => unreachable!(),
        };
        let normal = if normal.dot(ray.direction) > 0.0 { -normal } else { normal };
        Some((Hit { t, surface, normal, point: ray.at(t) }, slot))
    }
}

/// Nearest surface return of a world ray within `max_range`, over every object
/// and the room shell.
pub fn nearest_hit(world_ray: &Ray, scene: &SceneIndex, max_range: f64) -> Option<Hit> {
    scene.cast(world_ray, max_range).map(|(h, _)| h)
}
