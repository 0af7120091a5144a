mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use roomcast::geometry::{intersect_primitive, nearest_hit, to_local_frame, Pose, Primitive, Ray, SceneIndex, SurfaceId, Vec3};
use roomcast::scene::{ObjectId, ObjectInstance, Room, Scene};

fn vec3(range: std::ops::Range<f64>) -> impl Strategy<Value = Vec3> {
    (range.clone(), range.clone(), range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn primitive() -> impl Strategy<Value = Primitive> {
    prop_oneof![
        vec3(0.1..1.5).prop_map(|h| Primitive::Box { half_extents: h }),
        (0.1f64..1.5).prop_map(|radius| Primitive::Sphere { radius }),
        (0.1f64..1.5, 0.1f64..1.5).prop_map(|(radius, half_height)| Primitive::Cylinder { radius, half_height }),
        any::<u64>().prop_map(|s| Primitive::Mesh(star_mesh(&mut rng(s), 5, 7, 0.4, 1.2))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn analytic_hits_match_marching(prim in primitive(), origin in vec3(-4.0..4.0), target in vec3(-1.5..1.5)) {
        let imp = Implicit::new(&prim);
        prop_assume!(imp.distance(origin) > 1e-3);
        let dir = (target - origin).normalized();
        prop_assume!(dir.is_some());
        let dir = dir.unwrap();
        let ray = Ray::new(origin, dir).unwrap();
        let analytic = prim.intersect_local(&ray);
        prop_assume!(analytic.is_none_or(|h| h.normal.dot(dir).abs() > 1e-3));
        let o = march(&imp, origin, dir, 0.0, 12.0);
        if let Some(t) = o.hit {
            let exit = march(&imp, origin, dir, t + MARCH_STEP, t + 0.01);
            prop_assume!(exit.hit.is_none_or(|t2| t2 - t >= 1e-3));
        }
        match (analytic, o.hit) {
            (Some(a), Some(t)) => {
                prop_assert!((a.t - t).abs() <= 1e-4, "analytic {} vs marched {}", a.t, t);
                // Outward normal, flipped or not, is a unit vector.
                prop_assert!((a.normal.norm() - 1.0).abs() < 1e-9);
            }
            (None, None) => {}
            (a, o) => prop_assert!(false, "classification differs: analytic {:?}, marched {:?}", a.map(|h| h.t), o),
        }
    }

    /// Moving the ray and the object by one rigid motion leaves the hit distance unchanged.
    #[test]
    fn hits_are_rigid_invariant(prim in primitive(), origin in vec3(-4.0..4.0), target in vec3(-1.0..1.0),
                                yaw in -3.1f64..3.1, shift in vec3(-5.0..5.0)) {
        let dir = (target - origin).normalized();
        prop_assume!(dir.is_some());
        let ray = Ray::new(origin, dir.unwrap()).unwrap();
        let motion = Pose::from_yaw_translation(yaw, shift);
        let moved = Ray::new(motion.transform_point(origin), motion.transform_vector(ray.direction)).unwrap();
        let local = to_local_frame(&moved, &motion);
        let a = intersect_primitive(&ray, &prim).unwrap();
        let b = intersect_primitive(&local, &prim).unwrap();
        match (a, b) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
            (None, None) => {}
            // Transforming can flip a hit that lies within rounding of tangency.
            (x, y) => prop_assert!(prim.intersect_local(&ray).is_some_and(|h| h.normal.dot(ray.direction).abs() < 1e-6),
                                   "{x:?} vs {y:?}"),
        }
    }
}

fn random_scene(r: &mut impl Rng, n: u32) -> Scene {
    let mut scene = Scene::empty(Room::new(8.0, 8.0, 3.0), 0);
    scene.room.shell = r.random_bool(0.5);
    for id in 1..=n {
        let primitive = match r.random_range(0..4) {
            0 => Primitive::Box {
                half_extents: Vec3::new(r.random_range(0.1..0.8), r.random_range(0.1..0.8), r.random_range(0.1..0.8)),
            },
            1 => Primitive::Sphere { radius: r.random_range(0.1..0.8) },
            2 => Primitive::Cylinder { radius: r.random_range(0.1..0.8), half_height: r.random_range(0.1..0.8) },
            _ => Primitive::Mesh(star_mesh(r, 4, 6, 0.2, 0.7)),
        };
        scene.objects.push(ObjectInstance {
            id: ObjectId(id),
            class_label: "Box".into(),
            translation: Vec3::new(r.random_range(-3.5..3.5), r.random_range(-3.5..3.5), r.random_range(0.3..2.7)),
            yaw: r.random_range(-3.2..3.2),
            primitive,
            reflectivity: 0.5,
        });
    }
    scene
}

#[test]
fn nearest_hit_matches_linear_scan() {
    let mut r = rng(77);
    for _ in 0..100 {
        let n = r.random_range(1..=50);
        let scene = random_scene(&mut r, n);
        let index = SceneIndex::build_unchecked(&scene);
        for _ in 0..20 {
            let origin = Vec3::new(r.random_range(-3.9..3.9), r.random_range(-3.9..3.9), r.random_range(0.1..2.9));
            let ray = Ray::new(origin, random_unit(&mut r)).unwrap();
            let mut best: Option<(f64, SurfaceId)> = None;
            for o in &scene.objects {
                if let Some(t) = intersect_primitive(&to_local_frame(&ray, &o.pose()), &o.primitive).unwrap() {
                    if t <= 30.0 && best.is_none_or(|b| t < b.0) {
                        best = Some((t, SurfaceId::Object(o.id)));
                    }
                }
            }
            let got = nearest_hit(&ray, &index, 30.0);
            match (got, best) {
                (Some(g), Some((t, s))) if g.surface != SurfaceId::Shell => {
                    assert!((g.t - t).abs() < 1e-9);
                    assert_eq!(g.surface, s);
                }
                (Some(g), b) => {
                    assert_eq!(g.surface, SurfaceId::Shell);
                    assert!(b.is_none_or(|(t, _)| t >= g.t));
                }
                (None, b) => assert!(b.is_none() && !scene.room.shell),
            }
        }
    }
}

#[test]
fn oracle_sanity() {
    // The oracle itself: a unit sphere hit head-on from 3 m.
    let s = Primitive::Sphere { radius: 1.0 };
    let o = march(&Implicit::new(&s), Vec3::new(-3.0, 0.0, 0.0), Vec3::X, 0.0, 10.0);
    assert!((o.hit.unwrap() - 2.0).abs() < 1e-5);
    // Winding number of a closed mesh: 1 inside, 0 outside.
    let m = star_mesh(&mut rng(1), 6, 8, 0.8, 1.0);
    assert!((winding_number(&m, Vec3::ZERO).abs() - 1.0).abs() < 1e-9);
    assert!(winding_number(&m, Vec3::new(3.0, 0.0, 0.0)).abs() < 1e-9);
}
