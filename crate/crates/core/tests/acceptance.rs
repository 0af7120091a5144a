//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). The process fails when any
//! criterion fails, except for parts that need more hardware threads than the
//! machine has; those print FAIL with the reason and only fail the process
//! when `ROOMCAST_ACCEPTANCE_STRICT=1`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use rand::Rng;
use roomcast::annotate::{extract_annotations, format_kitti_line, parse_kitti_line, LabeledBox};
use roomcast::eval::{compute_report, iou_3d, iou_bev, DEFAULT_MATCH_THRESHOLD};
use roomcast::geometry::{
    intersect_primitive, nearest_hit, to_local_frame, Pose, Primitive, Ray, SceneIndex, SurfaceId, Vec3, T_MIN,
};
use roomcast::pipeline::{azimuth_octant, run_dataset, RunConfig, Trajectory};
use roomcast::scene::{
    default_taxonomy, generate_scene, validate_scene, ObjectId, ObjectInstance, Room, Scene, SceneConfig, ShapeKind,
};
use roomcast::sensor::{build_scan_pattern, simulate_scan, SensorConfig};
use roomcast::storage::{read_manifest, read_times};
use sha2::{Digest, Sha256};

struct Outcome {
    pass: bool,
    /// The failure is only that the machine lacks the hardware the criterion presumes.
    hardware_limited: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, hardware_limited: false, detail: detail.into() }
    }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "intersection oracle equivalence", c1_intersection_oracle),
        (2, "nearest_hit equals exhaustive oracle", c2_nearest_hit_oracle),
        (3, "IoU oracle equivalence", c3_iou_oracle),
        (4, "throughput and parallel speedup", c4_throughput),
        (5, "determinism across worker counts", c5_determinism),
        (6, "format fidelity", c6_format_fidelity),
        (7, "annotation visibility rule", c7_visibility),
        (8, "metric suite self-consistency", c8_metrics),
        (9, "desk-scale dataset reproduction", c9_dataset_shape),
    ];
    let only: Option<u32> = std::env::var("ROOMCAST_ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let strict = std::env::var("ROOMCAST_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut hard_fail = false;
    for (n, name, run) in criteria {
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n} [PRIMARY] {verdict}: {name} ({:.1} s) {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.pass && (strict || !o.hardware_limited) {
            hard_fail = true;
        }
    }
    if hard_fail {
        std::process::exit(1);
    }
}

fn random_primitive(kind: usize, r: &mut impl Rng) -> Primitive {
    match kind {
        0 => Primitive::Box {
            half_extents: Vec3::new(r.random_range(0.1..1.5), r.random_range(0.1..1.5), r.random_range(0.1..1.5)),
        },
        1 => Primitive::Sphere { radius: r.random_range(0.1..1.5) },
        2 => Primitive::Cylinder { radius: r.random_range(0.1..1.5), half_height: r.random_range(0.1..1.5) },
        _ => Primitive::Mesh(star_mesh(r, 6, 8, 0.4, 1.2)),
    }
}

const GRAZING: f64 = 1e-3;

/// Classifies one (ray, primitive) case against the marching oracle.
/// Returns `None` for tangential or ambiguous cases.
fn oracle_case(prim: &Primitive, origin: Vec3, dir: Vec3) -> Option<(Option<f64>, Option<f64>)> {
    let imp = Implicit::new(prim);
    if imp.distance(origin) < GRAZING {
        return None;
    }
    let ray = Ray::new(origin, dir).unwrap();
    let analytic = prim.intersect_local(&ray);
    if let Some(h) = analytic {
        if h.normal.dot(dir).abs() < GRAZING {
            return None;
        }
    }
    let o = march(&imp, origin, dir, 0.0, 12.0);
    if let Some(t) = o.hit {
        // Chord through the shape; very short chords are grazing contacts.
        let next = march(&imp, origin, dir, t + MARCH_STEP, t + 0.01);
        if next.hit.is_some_and(|t2| t2 - t < GRAZING) {
            return None;
        }
    }
    Some((analytic.map(|h| h.t), o.hit))
}

fn c1_intersection_oracle() -> Outcome {
    let names = ["box", "sphere", "cylinder", "mesh"];
    let mut r = rng(1001);
    let mut details = Vec::new();
    let mut pass = true;
    let start = Instant::now();
    for (kind, name) in names.iter().enumerate() {
        let (mut compared, mut tangential, mut class_mismatch, mut worst) = (0usize, 0usize, 0usize, 0f64);
        let mut hits = 0usize;
        let mut prim = random_primitive(kind, &mut r);
        for case in 0..10_000 {
            if case % 10 == 0 {
                prim = random_primitive(kind, &mut r);
            }
            let origin = random_unit(&mut r) * r.random_range(0.0..4.0);
            let target = Vec3::new(r.random_range(-1.5..1.5), r.random_range(-1.5..1.5), r.random_range(-1.5..1.5));
            let Some(dir) = (target - origin).normalized() else { continue };
            match oracle_case(&prim, origin, dir) {
                None => tangential += 1,
                Some((a, o)) => {
                    compared += 1;
                    match (a, o) {
                        (Some(ta), Some(to)) => {
                            hits += 1;
                            worst = worst.max((ta - to).abs());
                        }
                        (None, None) => {}
                        _ => class_mismatch += 1,
                    }
                }
            }
            // The public entry point must agree with the local intersector.
            let ray = Ray::new(origin, dir).unwrap();
            if intersect_primitive(&ray, &prim).unwrap() != prim.intersect_local(&ray).map(|h| h.t) {
                class_mismatch += 1;
            }
        }
        let ok = class_mismatch == 0 && worst <= 1e-4 && tangential < 500;
        pass &= ok;
        details.push(format!(
            "{name}: {compared} compared ({hits} hits), {tangential} tangential skipped, {class_mismatch} hit/miss mismatches, max |Δt| {worst:.2e}"
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    Outcome::new(pass, format!("[{}] in {:.1} s", details.join("; "), elapsed.as_secs_f64()))
}

fn random_object(id: u32, r: &mut impl Rng) -> ObjectInstance {
    let kind = r.random_range(0..5usize);
    let primitive = match kind {
        4 => Primitive::Mesh(roomcast::geometry::TriangleMesh::cuboid(Vec3::splat(-0.3), Vec3::new(0.4, 0.2, 0.5)).unwrap()),
        k => random_primitive(k, r),
    };
    ObjectInstance {
        id: ObjectId(id),
        class_label: "Box".into(),
        translation: Vec3::new(r.random_range(-4.5..4.5), r.random_range(-4.5..4.5), r.random_range(0.2..2.8)),
        yaw: r.random_range(-3.2..3.2),
        primitive,
        reflectivity: 0.5,
    }
}

fn exhaustive_nearest(scene: &Scene, ray: &Ray, max_range: f64) -> Vec<(f64, SurfaceId)> {
    let mut hits = Vec::new();
    for o in &scene.objects {
        let local = to_local_frame(ray, &o.pose());
        if let Some(t) = intersect_primitive(&local, &o.primitive).unwrap() {
            if t > T_MIN && t <= max_range {
                hits.push((t, SurfaceId::Object(o.id)));
            }
        }
    }
    if scene.room.shell {
        let room = &scene.room;
        let pose = Pose::from_translation(Vec3::new(0.0, 0.0, room.height / 2.0));
        let shell = Primitive::Box { half_extents: Vec3::new(room.width / 2.0, room.depth / 2.0, room.height / 2.0) };
        if let Some(t) = intersect_primitive(&to_local_frame(ray, &pose), &shell).unwrap() {
            if t > T_MIN && t <= max_range {
                hits.push((t, SurfaceId::Shell));
            }
        }
    }
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    hits
}

fn c2_nearest_hit_oracle() -> Outcome {
    let mut r = rng(2002);
    let (mut pairs, mut mismatches, mut hits) = (0usize, 0usize, 0usize);
    let mut first_bad = String::new();
    while pairs < 10_000 {
        let n = r.random_range(1..=50u32);
        let mut scene = Scene::empty(Room::new(10.0, 10.0, 3.0), 0);
        scene.room.shell = r.random_bool(0.5);
        scene.objects = (1..=n).map(|i| random_object(i, &mut r)).collect();
        let index = SceneIndex::build_unchecked(&scene);
        for _ in 0..20 {
            let origin = Vec3::new(r.random_range(-4.9..4.9), r.random_range(-4.9..4.9), r.random_range(0.1..2.9));
            let ray = Ray::new(origin, random_unit(&mut r)).unwrap();
            let max_range = r.random_range(1.0..20.0);
            let got = nearest_hit(&ray, &index, max_range);
            let want = exhaustive_nearest(&scene, &ray, max_range);
            pairs += 1;
            let agree = match (got, want.first()) {
                (None, None) => true,
                (Some(g), Some(&(t, s))) => {
                    hits += 1;
                    // Exact ties between different surfaces may resolve either way.
                    let tie = want.get(1).is_some_and(|w| w.0 - t <= 1e-12);
                    (g.t - t).abs() <= 1e-9 && (g.surface == s || tie)
                }
                _ => false,
            };
            if !agree {
                mismatches += 1;
                if first_bad.is_empty() {
                    first_bad = format!(" first: got {:?}, want {:?}", got.map(|g| (g.t, g.surface)), want.first());
                }
            }
        }
    }
    Outcome::new(mismatches == 0, format!("{pairs} pairs ({hits} hits), {mismatches} disagreements{first_bad}"))
}

fn c3_iou_oracle() -> Outcome {
    let mut r = rng(3003);
    let (mut worst_bev, mut worst_3d) = (0f64, 0f64);
    for i in 0..100 {
        let a = random_box(&mut r, "Box");
        let b = nearby_box(&mut r, &a);
        worst_bev = worst_bev.max((iou_bev(&a, &b).unwrap() - monte_carlo_iou_bev(&a, &b, 1_000_000, i)).abs());
        let a = random_box(&mut r, "Box");
        let b = nearby_box(&mut r, &a);
        worst_3d = worst_3d.max((iou_3d(&a, &b).unwrap() - monte_carlo_iou_3d(&a, &b, 1_000_000, 1000 + i)).abs());
    }
    let unit = |x: f64, z: f64| LabeledBox {
        class_label: "Box".into(),
        center: Vec3::new(x, 0.0, z),
        length: 1.0,
        width: 1.0,
        height: 1.0,
        yaw: 0.0,
        score: None,
    };
    let closed = [
        iou_bev(&unit(0.0, 0.5), &unit(0.0, 0.5)).unwrap() - 1.0,
        iou_3d(&unit(0.0, 0.5), &unit(0.0, 0.5)).unwrap() - 1.0,
        iou_bev(&unit(0.0, 0.5), &unit(0.5, 0.5)).unwrap() - 1.0 / 3.0,
        iou_3d(&unit(0.0, 0.5), &unit(0.5, 0.5)).unwrap() - 1.0 / 3.0,
        iou_3d(&unit(0.0, 0.5), &unit(0.0, 1.0)).unwrap() - 1.0 / 3.0,
    ];
    let closed_ok = closed.iter().all(|d| d.abs() <= 1e-6) && closed[0] == 0.0 && closed[1] == 0.0;
    Outcome::new(
        worst_bev < 0.01 && worst_3d < 0.01 && closed_ok,
        format!("max |analytic - MC|: BEV {worst_bev:.4}, 3D {worst_3d:.4}; closed-form residuals {closed:?}"),
    )
}

/// A validated scene with exactly 50 objects.
fn fifty_object_scene() -> Scene {
    let mut cfg = SceneConfig { room_width: [14.0, 14.0].into(), room_depth: [12.0, 12.0].into(), ..SceneConfig::default() };
    for c in &mut cfg.classes {
        c.count = [3, 3];
    }
    let (mut scene, _) = generate_scene(&cfg, 4).unwrap();
    assert!(scene.objects.len() >= 50, "only {} objects placed", scene.objects.len());
    scene.objects.truncate(50);
    assert!(validate_scene(&scene).is_empty());
    scene
}

fn time_scan(workers: usize, index: &SceneIndex, pose: &Pose, sensor: &SensorConfig) -> f64 {
    let pattern = build_scan_pattern(sensor).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
    pool.install(|| {
        (0..3)
            .map(|k| {
                let t = Instant::now();
                let s = simulate_scan(index, pose, &pattern, sensor, 7, k).unwrap();
                assert_eq!(pattern.len(), 115_200);
                assert!(!s.cloud.is_empty());
                t.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min)
    })
}

fn c4_throughput() -> Outcome {
    let scene = fifty_object_scene();
    let index = SceneIndex::build(&scene).unwrap();
    let sensor = SensorConfig::default();
    let pose = Pose::from_yaw_translation(0.3, Vec3::new(0.2, -0.1, 0.6));
    let t1 = time_scan(1, &index, &pose, &sensor);
    let t8 = time_scan(8, &index, &pose, &sensor);
    let speedup = t1 / t8;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let budget_ok = t8 <= 1.0;
    let speed_ok = speedup >= 3.0;
    let mut o = Outcome::new(
        budget_ok && speed_ok,
        format!(
            "115200 rays, 50 objects: 1 worker {t1:.3} s, 8 workers {t8:.3} s, speedup {speedup:.2}x \
             (budget 1.0 s: {}; speedup >= 3x: {}; machine has {threads} hardware threads)",
            if budget_ok { "met" } else { "missed" },
            if speed_ok { "met" } else { "missed" },
        ),
    );
    o.hardware_limited = !o.pass && budget_ok && threads < 8;
    o
}

fn tree_digest(root: &Path) -> BTreeMap<String, String> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, String>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                let digest = Sha256::digest(fs::read(&p).unwrap());
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), hex);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn small_run_config() -> RunConfig {
    RunConfig {
        seed: 0xDEC0DE,
        scenes: 3,
        frames_per_scene: 4,
        sensor: SensorConfig { dropout_probability: 0.05, ..SensorConfig::default() },
        ..RunConfig::default()
    }
}

fn c5_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_run_config();
    let (a, b) = (dir.path().join("w1"), dir.path().join("w4"));
    run_dataset(&cfg, &a, Some(1)).unwrap();
    run_dataset(&cfg, &b, Some(4)).unwrap();
    let (da, db) = (tree_digest(&a), tree_digest(&b));
    // Re-running from the recorded config reproduces the tree as well.
    let c = dir.path().join("replay");
    let replay = RunConfig::load(&a.join("run_config.toml")).unwrap();
    run_dataset(&replay, &c, Some(2)).unwrap();
    let dc = tree_digest(&c);
    let differing: Vec<&String> = da.keys().filter(|k| da.get(*k) != db.get(*k)).collect();
    Outcome::new(
        da == db && da == dc,
        format!(
            "{} files hashed; differing between 1 and 4 workers: {}; replay identical: {}",
            da.len(),
            differing.len(),
            da == dc
        ),
    )
}

fn c6_format_fidelity() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("ds");
    let cfg = small_run_config();
    run_dataset(&cfg, &root, Some(2)).unwrap();
    let manifest = read_manifest(&root).unwrap();
    let (mut bins, mut lines, mut problems) = (0usize, 0usize, Vec::new());
    let mut worst_drift = 0f64;
    for seq in &manifest.sequences {
        let sdir = root.join(&seq.name);
        let times = read_times(&sdir.join("times.txt")).unwrap();
        let raw_times = fs::read_to_string(sdir.join("times.txt")).unwrap();
        if !raw_times.lines().all(|l| l.split(' ').nth(1).is_some_and(|t| t.bytes().all(|b| b.is_ascii_digit()))) {
            problems.push(format!("{}: non-integer timestamp text", seq.name));
        }
        for (k, (id, ts)) in times.iter().enumerate() {
            if *ts != cfg.timestamp(k) || id != &format!("{k:06}") {
                problems.push(format!("{}: frame {k} timestamp {ts}", seq.name));
            }
        }
        for k in 0..seq.frame_count {
            let bytes = fs::read(sdir.join(format!("velodyne/{k:06}.bin"))).unwrap();
            bins += 1;
            if !bytes.len().is_multiple_of(16) {
                problems.push(format!("{}/{k:06}.bin has {} bytes", seq.name, bytes.len()));
            }
            let floats_ok = bytes.chunks_exact(4).all(|c| f32::from_le_bytes(c.try_into().unwrap()).is_finite());
            if !floats_ok {
                problems.push(format!("{}/{k:06}.bin has non-finite values", seq.name));
            }
            for line in fs::read_to_string(sdir.join(format!("label_2/{k:06}.txt"))).unwrap().lines() {
                lines += 1;
                let b = parse_kitti_line(line).unwrap();
                let again = parse_kitti_line(&format_kitti_line(&b).unwrap()).unwrap();
                let drift = [
                    (again.center - b.center).norm(),
                    (again.length - b.length).abs(),
                    (again.width - b.width).abs(),
                    (again.height - b.height).abs(),
                    roomcast::geometry::normalize_angle(again.yaw - b.yaw).abs(),
                ]
                .into_iter()
                .fold(0.0, f64::max);
                worst_drift = worst_drift.max(drift);
                if format_kitti_line(&again).unwrap() != line {
                    problems.push(format!("label line not reproduced: {line}"));
                }
            }
        }
    }
    // Against the in-memory annotations the first frame was written from.
    let (scene, _) = generate_scene(&cfg.scene, cfg.scene_seed(0)).unwrap();
    let index = SceneIndex::build(&scene).unwrap();
    let pattern = build_scan_pattern(&cfg.sensor).unwrap();
    let pose = cfg.trajectory.pose(0, cfg.frames_per_scene).unwrap();
    let scan = simulate_scan(&index, &pose, &pattern, &cfg.sensor, cfg.scene_seed(0), 0).unwrap();
    let truth = extract_annotations(&scene, &scan, cfg.min_points).unwrap();
    let on_disk = roomcast::storage::read_labels(&root.join("0000/label_2/000000.txt")).unwrap();
    if truth.len() != on_disk.len() {
        problems.push(format!("frame 0: {} annotations in memory, {} on disk", truth.len(), on_disk.len()));
    }
    for (t, d) in truth.iter().zip(&on_disk) {
        let b = &t.bbox;
        let drift = [
            (d.center - b.center).abs().x.max((d.center - b.center).abs().y).max((d.center - b.center).abs().z),
            (d.length - b.length).abs(),
            (d.width - b.width).abs(),
            (d.height - b.height).abs(),
            roomcast::geometry::normalize_angle(d.yaw - b.yaw).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        worst_drift = worst_drift.max(drift);
        if d.class_label != b.class_label {
            problems.push(format!("class {} written as {}", b.class_label, d.class_label));
        }
    }
    let cloud = roomcast::storage::read_cloud(&root.join("0000/velodyne/000000.bin")).unwrap();
    if cloud.points != scan.cloud.points {
        problems.push("frame 0 cloud differs from the simulated points".into());
    }
    let pass = problems.is_empty() && worst_drift <= 1e-6 && lines > 0;
    Outcome::new(
        pass,
        format!("{bins} clouds, {lines} label lines, max round-trip drift {worst_drift:.1e}, problems: {problems:?}"),
    )
}

fn c7_visibility() -> Outcome {
    let mut scene = Scene::empty(Room::new(10.0, 8.0, 3.0), 0);
    scene.taxonomy.push("Wall".into());
    let obj = |id: u32, class: &str, t: Vec3, yaw: f64, primitive: Primitive| ObjectInstance {
        id: ObjectId(id),
        class_label: class.into(),
        translation: t,
        yaw,
        primitive,
        reflectivity: 0.5,
    };
    scene.objects = vec![
        // Full-height partition between the sensor and object 2.
        obj(1, "Wall", Vec3::new(2.0, 0.0, 1.5), 0.0, Primitive::Box { half_extents: Vec3::new(0.05, 3.0, 1.5) }),
        obj(2, "Box", Vec3::new(3.5, 0.3, 0.25), 0.4, Primitive::Box { half_extents: Vec3::splat(0.25) }),
        obj(3, "Lamp", Vec3::new(-2.0, 1.0, 0.4), 0.0, Primitive::Sphere { radius: 0.4 }),
        obj(4, "Trashcan", Vec3::new(0.0, -2.5, 0.5), 0.0, Primitive::Cylinder { radius: 0.3, half_height: 0.5 }),
        obj(5, "Table", Vec3::new(-2.0, -2.0, 0.375), 0.7, ShapeKind::Table.build(1.2, 0.8, 0.75).unwrap()),
    ];
    assert!(validate_scene(&scene).is_empty(), "{:?}", validate_scene(&scene));
    let index = SceneIndex::build(&scene).unwrap();
    let sensor = SensorConfig { range_noise_sigma: 0.0, dropout_probability: 0.0, ..SensorConfig::default() };
    let pattern = build_scan_pattern(&sensor).unwrap();
    let pose = Pose::from_yaw_translation(0.25, Vec3::new(0.2, 0.1, 0.6));
    let scan = simulate_scan(&index, &pose, &pattern, &sensor, 11, 0).unwrap();
    let labels = extract_annotations(&scene, &scan, 1).unwrap();
    let occluded_hits = scan.hits_per_object.get(&ObjectId(2)).copied().unwrap_or(0);
    let labeled: BTreeSet<u32> = labels.iter().map(|g| g.object_id.0).collect();
    let visible_ok = [1, 3, 4, 5].iter().all(|id| labeled.contains(id));
    let mut worst_outside = 0f64;
    for g in &labels {
        for (p, src) in scan.cloud.points.iter().zip(&scan.point_sources) {
            if *src != SurfaceId::Object(g.object_id) {
                continue;
            }
            let pos = Vec3::new(p.x as f64, p.y as f64, p.z as f64);
            // Smallest margin that makes the box contain the point.
            let mut lo = 0.0;
            if !g.bbox.contains(pos, 0.0) {
                let mut hi = 1.0;
                for _ in 0..40 {
                    let mid = (lo + hi) / 2.0;
                    if g.bbox.contains(pos, mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                lo = hi;
            }
            worst_outside = worst_outside.max(lo);
        }
    }
    let pass = occluded_hits == 0 && !labeled.contains(&2) && visible_ok && worst_outside <= 1e-3;
    Outcome::new(
        pass,
        format!(
            "occluded object: {occluded_hits} hits, labeled {}; labeled ids {labeled:?}; worst point outside its box {worst_outside:.2e} m",
            labeled.contains(&2)
        ),
    )
}

fn c8_metrics() -> Outcome {
    let mut r = rng(8008);
    let classes = ["Chair", "Table", "Sofa"];
    // Perfect detector on random frames.
    let frames: Vec<_> = (0..20)
        .map(|_| {
            let g: Vec<LabeledBox> = (0..r.random_range(1..8)).map(|_| random_box_of(&mut r, &classes)).collect();
            (g.clone(), g)
        })
        .collect();
    let perfect = compute_report(&frames, DEFAULT_MATCH_THRESHOLD).unwrap();
    let perfect_ok = perfect.precision.values().all(|&p| p == 1.0)
        && perfect.mean_iou == 1.0
        && perfect.l1_error == 0.0
        && perfect.l2_error == 0.0;

    let mut order_violations = 0;
    for _ in 0..1000 {
        let frames: Vec<_> = (0..r.random_range(1..4))
            .map(|_| {
                let gts: Vec<LabeledBox> = (0..r.random_range(0..6)).map(|_| random_box_of(&mut r, &classes)).collect();
                let mut dets = Vec::new();
                for g in &gts {
                    if r.random_bool(0.8) {
                        dets.push(nearby_box(&mut r, g));
                    }
                }
                for _ in 0..r.random_range(0..3) {
                    dets.push(random_box_of(&mut r, &classes));
                }
                (gts, dets)
            })
            .collect();
        let rep = compute_report(&frames, DEFAULT_MATCH_THRESHOLD).unwrap();
        let (a25, a50, a75) = (rep.acc(0.25).unwrap(), rep.acc(0.5).unwrap(), rep.acc(0.75).unwrap());
        if !(a25 >= a50 && a50 >= a75) {
            order_violations += 1;
        }
    }

    let fixture = hand_fixture_residual();
    Outcome::new(
        perfect_ok && order_violations == 0 && fixture <= 1e-6,
        format!("perfect detector ok: {perfect_ok}; Acc ordering violations in 1000 reports: {order_violations}; hand fixture max residual {fixture:.1e}"),
    )
}

/// Three frames, seven detections; expected values worked out by hand.
fn hand_fixture_residual() -> f64 {
    let cube = |class: &str, x: f64, y: f64, z: f64, l: f64| LabeledBox {
        class_label: class.into(),
        center: Vec3::new(x, y, z),
        length: l,
        width: 1.0,
        height: 1.0,
        yaw: 0.0,
        score: Some(0.9),
    };
    let frames = vec![
        (
            vec![cube("Chair", 0.0, 0.0, 0.5, 1.0), cube("Table", 5.0, 0.0, 0.5, 2.0)],
            vec![cube("Chair", 0.2, 0.0, 0.5, 1.0), cube("Table", 5.0, 0.5, 0.5, 2.0), cube("Chair", 10.0, 10.0, 0.5, 1.0)],
        ),
        (vec![cube("Chair", 0.0, 0.0, 0.5, 1.0)], vec![cube("Chair", 0.0, 0.0, 0.8, 1.0), cube("Table", 0.0, 0.0, 0.5, 1.0)]),
        (
            vec![cube("Table", 0.0, 0.0, 0.5, 1.0), cube("Chair", 3.0, 0.0, 0.5, 1.0)],
            vec![cube("Table", 0.5, 0.0, 0.5, 1.0), cube("Chair", 3.7, 0.0, 0.5, 1.0)],
        ),
    ];
    let r = compute_report(&frames, DEFAULT_MATCH_THRESHOLD).unwrap();
    // Matched IoUs: 0.8/1.2, 1/3, 0.7/1.3, 0.5/1.5.
    let expected = [
        (r.mean_iou, 73.0 / 156.0),
        (r.acc(0.25).unwrap(), 1.0),
        (r.acc(0.5).unwrap(), 0.5),
        (r.acc(0.75).unwrap(), 0.0),
        (r.l1_error, 0.375),
        (r.l2_error, 0.1575),
        (r.precision["Chair"], 0.5),
        (r.precision["Table"], 2.0 / 3.0),
        (r.overall_precision, 4.0 / 7.0),
        (r.counts["Chair"].fn_ as f64, 1.0),
        (r.counts["Table"].fn_ as f64, 0.0),
        (r.matched_pairs as f64, 4.0),
    ];
    expected.iter().map(|(got, want)| (got - want).abs()).fold(0.0, f64::max)
}

fn c9_dataset_shape() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("sim");
    let cfg = RunConfig { seed: 2024, trajectory: Trajectory::default(), ..RunConfig::default() };
    let start = Instant::now();
    let summary = run_dataset(&cfg, &root, None).unwrap();
    let elapsed = start.elapsed();
    let manifest = read_manifest(&root).unwrap();
    let scenes: BTreeSet<String> =
        manifest.sequences.iter().map(|s| fs::read_to_string(root.join(&s.name).join("scene.toml")).unwrap()).collect();
    let (mut frames, mut full_octants, mut bad_intensity) = (0usize, 0usize, 0usize);
    let mut classes_labeled = BTreeSet::new();
    for seq in &manifest.sequences {
        for k in 0..seq.frame_count {
            let cloud = roomcast::storage::read_cloud(&root.join(&seq.name).join(format!("velodyne/{k:06}.bin"))).unwrap();
            frames += 1;
            let mut oct = [false; 8];
            for p in &cloud.points {
                oct[azimuth_octant(p.x, p.y)] = true;
                if !(p.intensity.is_finite() && (0.0..=1.0).contains(&p.intensity)) {
                    bad_intensity += 1;
                }
            }
            full_octants += oct.iter().all(|&o| o) as usize;
            let labels = roomcast::storage::read_labels(&root.join(&seq.name).join(format!("label_2/{k:06}.txt"))).unwrap();
            classes_labeled.extend(labels.into_iter().map(|b| b.class_label));
        }
    }
    let taxonomy_ok = manifest.taxonomy == default_taxonomy() && manifest.taxonomy.len() == 20;
    let pass =
        scenes.len() >= 20 && taxonomy_ok && bad_intensity == 0 && full_octants == frames && elapsed <= Duration::from_secs(600);
    Outcome::new(
        pass,
        format!(
            "{} distinct scenes, {frames} frames, {} points, taxonomy of {} classes ({} labeled), \
             frames with all 8 octants {full_octants}/{frames}, points with invalid intensity {bad_intensity}, {:.1} s",
            scenes.len(),
            summary.points,
            manifest.taxonomy.len(),
            classes_labeled.len(),
            elapsed.as_secs_f64()
        ),
    )
}
