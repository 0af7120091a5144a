//! Batch workflows behind the command-line tool: whole-dataset generation,
//! directory-level evaluation and dataset statistics.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::{extract_annotations, LabeledBox};
use crate::error::{Error, Result};
use crate::eval::{compute_report_for_classes, EvalFrame, EvalReport};
use crate::geometry::{normalize_angle, Mat3, Pose, SceneIndex, Vec3};
use crate::rng::{derive_seed, mix64};
use crate::scene::Scene;
use crate::scene::{generate_scene, SceneConfig};
use crate::sensor::{build_scan_pattern, simulate_scan, SensorConfig};
use crate::storage::{
    self, frame_id, read_cloud, read_labels, read_manifest, write_manifest, write_scene, DatasetManifest, FrameRecord,
    SequenceEntry, SequenceWriter, Split, FORMAT_VERSION,
};

pub const TOOL_VERSION: &str = concat!("roomcast ", env!("CARGO_PKG_VERSION"));
pub const RUN_CONFIG_FILE: &str = "run_config.toml";
pub const WORKERS_ENV: &str = "ROOMCAST_WORKERS";

/// Sensor path through each room, in room coordinates (origin at the floor
/// centre, z up).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    /// One full circle around the room centre per sequence, facing along the path.
    Orbit { radius: f64, height: f64 },
    /// `[x, y, z, yaw]` waypoints; frames are spread evenly over the waypoint
    /// index range with linear position and shortest-arc yaw interpolation.
    Waypoints { points: Vec<[f64; 4]> },
    /// One pose per frame: `[x, y, z, yaw]` or a row-major 3×4 matrix.
    Poses { poses: Vec<Vec<f64>> },
}

impl Default for Trajectory {
    fn default() -> Self {
        Trajectory::Orbit { radius: 0.5, height: 0.6 }
    }
}

impl Trajectory {
    pub fn pose(&self, frame: usize, frames: usize) -> Result<Pose> {
        match self {
            Trajectory::Orbit { radius, height } => {
                let a = std::f64::consts::TAU * frame as f64 / frames as f64;
                let (s, c) = a.sin_cos();
                let yaw = normalize_angle(a + std::f64::consts::FRAC_PI_2);
                Ok(Pose::from_yaw_translation(yaw, Vec3::new(radius * c, radius * s, *height)))
            }
            Trajectory::Waypoints { points } => {
                let at = |p: &[f64; 4]| Pose::from_yaw_translation(p[3], Vec3::new(p[0], p[1], p[2]));
                if points.len() == 1 || frames == 1 {
                    return Ok(at(&points[0]));
                }
                let u = frame as f64 * (points.len() - 1) as f64 / (frames - 1) as f64;
                let i = (u.floor() as usize).min(points.len() - 2);
                let f = u - i as f64;
                let (a, b) = (&points[i], &points[i + 1]);
                let lerp = |k: usize| a[k] + (b[k] - a[k]) * f;
                let yaw = normalize_angle(a[3] + normalize_angle(b[3] - a[3]) * f);
                Ok(Pose::from_yaw_translation(yaw, Vec3::new(lerp(0), lerp(1), lerp(2))))
            }
            Trajectory::Poses { poses } => {
                let p = &poses[frame];
                match p.len() {
                    4 => Ok(Pose::from_yaw_translation(p[3], Vec3::new(p[0], p[1], p[2]))),
                    12 => Pose::from_matrix_3x4(p.as_slice().try_into().expect("length checked")),
                    n => Err(Error::invalid(format!("pose {frame} has {n} values, expected 4 or 12"))),
                }
            }
        }
    }

    fn validate(&self, frames: usize) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Trajectory::Orbit { radius, height } => {
                if !(finite(&[*radius, *height]) && *radius >= 0.0) {
                    return Err(Error::invalid("orbit radius must be non-negative and finite"));
                }
            }
            Trajectory::Waypoints { points } => {
                if points.is_empty() || !points.iter().all(|p| finite(p)) {
                    return Err(Error::invalid("waypoint trajectory needs at least one finite waypoint"));
                }
            }
            Trajectory::Poses { poses } => {
                if poses.len() != frames {
                    return Err(Error::invalid(format!(
                        "trajectory lists {} poses but frames_per_scene is {frames}",
                        poses.len()
                    )));
                }
                for k in 0..frames {
                    self.pose(k, frames)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train: 0.70, val: 0.15, test: 0.15 }
    }
}

/// Everything a `dataset` run depends on. Output location and worker count
/// are run-time options, not part of the configuration, so that the tree a
/// configuration produces is the same wherever and however it is run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(with = "crate::storage::u64_compat")]
    pub seed: u64,
    pub scenes: usize,
    pub frames_per_scene: usize,
    pub frame_period_ns: u64,
    /// Timestamp of the first frame of every sequence.
    pub epoch_ns: u64,
    /// Minimum returns for an object to be labeled.
    pub min_points: u32,
    #[serde(default)]
    pub splits: SplitRatios,
    #[serde(default)]
    pub trajectory: Trajectory,
    #[serde(default)]
    pub sensor: SensorConfig,
    #[serde(default)]
    pub scene: SceneConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            scenes: 20,
            frames_per_scene: 10,
            frame_period_ns: 100_000_000,
            epoch_ns: 1_700_000_000_000_000_000,
            min_points: 5,
            splits: SplitRatios::default(),
            trajectory: Trajectory::default(),
            sensor: SensorConfig::default(),
            scene: SceneConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenes == 0 || self.frames_per_scene == 0 {
            return Err(Error::invalid("scenes and frames_per_scene must be at least 1"));
        }
        if self.frames_per_scene > 1_000_000 {
            return Err(Error::invalid("frames_per_scene must fit six-digit frame ids"));
        }
        if self.frame_period_ns == 0 {
            return Err(Error::invalid("frame_period_ns must be positive"));
        }
        let last =
            (self.frames_per_scene as u64 - 1).checked_mul(self.frame_period_ns).and_then(|d| d.checked_add(self.epoch_ns));
        if last.is_none() {
            return Err(Error::invalid("timestamps overflow 64 bits"));
        }
        if self.min_points == 0 {
            return Err(Error::invalid("min_points must be at least 1"));
        }
        let s = &self.splits;
        if ![s.train, s.val, s.test].iter().all(|v| v.is_finite() && *v >= 0.0) || s.train + s.val + s.test <= 0.0 {
            return Err(Error::invalid("split ratios must be non-negative with a positive sum"));
        }
        self.sensor.validate()?;
        self.scene.validate()?;
        self.trajectory.validate(self.frames_per_scene)
    }

    pub fn scene_seed(&self, scene: usize) -> u64 {
        derive_seed(self.seed, scene as u64)
    }

    pub fn timestamp(&self, frame: usize) -> u64 {
        self.epoch_ns + frame as u64 * self.frame_period_ns
    }
}

pub fn sequence_name(scene: usize) -> String {
    format!("{scene:04}")
}

/// Split assignment from a hash of `"<sequence>/<frame_id>"`.
pub fn assign_split(key: &str, ratios: &SplitRatios) -> Split {
    // FNV-1a, then a SplitMix64 finaliser to spread the bits.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    let u = (mix64(h) >> 11) as f64 / (1u64 << 53) as f64;
    let total = ratios.train + ratios.val + ratios.test;
    if u < ratios.train / total {
        Split::Train
    } else if u < (ratios.train + ratios.val) / total {
        Split::Val
    } else {
        Split::Test
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetSummary {
    pub sequences: usize,
    pub frames: usize,
    pub points: u64,
    pub labels: u64,
    pub dropped_objects: u64,
}

fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// Generates the full dataset under `out`, which must be absent or empty.
pub fn run_dataset(config: &RunConfig, out: &Path, workers: Option<usize>) -> Result<DatasetSummary> {
    config.validate()?;
    if out.exists() {
        let mut entries = fs::read_dir(out).map_err(|e| Error::io(out, e))?;
        if entries.next().is_some() {
            return Err(Error::Precondition(format!("output root {} is not empty", out.display())));
        }
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let cfg_path = out.join(RUN_CONFIG_FILE);
    fs::write(&cfg_path, format!("# written by {TOOL_VERSION}\n{}", config.to_toml())).map_err(|e| Error::io(&cfg_path, e))?;

    let pattern = build_scan_pattern(&config.sensor)?;
    let pool = worker_pool(workers)?;
    let mut summary = DatasetSummary::default();
    let mut manifest = DatasetManifest {
        format_version: FORMAT_VERSION.into(),
        generator: TOOL_VERSION.into(),
        taxonomy: config.scene.taxonomy.clone(),
        sequences: Vec::new(),
        splits: BTreeMap::new(),
    };
    for s in 0..config.scenes {
        let seq = sequence_name(s);
        let scene_seed = config.scene_seed(s);
        let (scene, log) = generate_scene(&config.scene, scene_seed)?;
        summary.dropped_objects += log.drops.len() as u64;
        let writer = SequenceWriter::open(out, &seq)?;
        write_scene(&scene, &writer.dir().join("scene.toml"))?;
        let log_path = writer.dir().join("generation_log.toml");
        let log_text = toml::to_string(&log).map_err(|e| Error::invalid(e.to_string()))?;
        fs::write(&log_path, log_text).map_err(|e| Error::io(&log_path, e))?;
        let index = SceneIndex::build(&scene)?;
        check_trajectory_in_room(config, &scene, &seq)?;

        let frames: Vec<FrameRecord> = pool.install(|| {
            (0..config.frames_per_scene)
                .into_par_iter()
                .map(|k| {
                    let pose = config.trajectory.pose(k, config.frames_per_scene)?;
                    let mut scan = simulate_scan(&index, &pose, &pattern, &config.sensor, scene_seed, k as u64)?;
                    let labels = extract_annotations(&scene, &scan, config.min_points)?;
                    scan.cloud.timestamp_ns = config.timestamp(k);
                    Ok(FrameRecord {
                        sequence: seq.clone(),
                        frame_id: frame_id(k),
                        cloud: scan.cloud,
                        labels,
                        timestamp_ns: config.timestamp(k),
                        sensor_pose: pose,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        for f in &frames {
            writer.write_frame(f)?;
            summary.points += f.cloud.len() as u64;
            summary.labels += f.labels.len() as u64;
            let key = format!("{seq}/{}", f.frame_id);
            manifest.splits.entry(assign_split(&key, &config.splits)).or_default().push(key);
        }
        summary.frames += frames.len();
        manifest.sequences.push(SequenceEntry { name: seq, frame_count: frames.len() });
    }
    summary.sequences = manifest.sequences.len();
    write_manifest(&manifest, out)?;
    Ok(summary)
}

fn check_trajectory_in_room(config: &RunConfig, scene: &Scene, seq: &str) -> Result<()> {
    let b = scene.room.bounds();
    for k in 0..config.frames_per_scene {
        let p = config.trajectory.pose(k, config.frames_per_scene)?.translation();
        if !b.contains(p) {
            return Err(Error::Precondition(format!(
                "sequence {seq}: sensor pose of frame {k} at ({:.3}, {:.3}, {:.3}) lies outside the room",
                p.x, p.y, p.z
            )));
        }
    }
    Ok(())
}

/// Label files to evaluate: every `.txt` under a `label_2` directory below
/// `root`, or, when there are none, the `.txt` files directly in `root`.
/// Paths are relative to `root` and sorted.
pub fn collect_label_files(root: &Path) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        for e in entries {
            let e = e.map_err(|e| Error::io(dir, e))?;
            let p = e.path();
            if p.is_dir() {
                walk(&p, root, out)?;
            } else if p.extension().is_some_and(|x| x == "txt") && dir.file_name().is_some_and(|n| n == "label_2") {
                out.push(p.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(root, root, &mut files)?;
    if files.is_empty() {
        for e in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
            let p = e.map_err(|e| Error::io(root, e))?.path();
            if p.is_file() && p.extension().is_some_and(|x| x == "txt") {
                files.push(p.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
    }
    files.sort();
    Ok(files)
}

/// Pairs ground-truth label files with same-named detection files; a missing
/// detection file means no detections for that frame.
pub fn load_eval_frames(gt_root: &Path, det_root: &Path) -> Result<Vec<EvalFrame>> {
    let files = collect_label_files(gt_root)?;
    if files.is_empty() {
        return Err(Error::invalid(format!("no label files under {}", gt_root.display())));
    }
    for extra in collect_label_files(det_root)? {
        if !gt_root.join(&extra).exists() {
            return Err(Error::Consistency(format!(
                "detections {} have no ground truth counterpart",
                det_root.join(&extra).display()
            )));
        }
    }
    files
        .iter()
        .map(|rel| {
            let gts = read_labels(&gt_root.join(rel))?;
            let det_path = det_root.join(rel);
            let dets: Vec<LabeledBox> = if det_path.exists() { read_labels(&det_path)? } else { Vec::new() };
            Ok((gts, dets))
        })
        .collect()
}

pub fn evaluate_dirs(gt_root: &Path, det_root: &Path, threshold: f64) -> Result<EvalReport> {
    let frames = load_eval_frames(gt_root, det_root)?;
    let classes = read_manifest(gt_root).map(|m| m.taxonomy).unwrap_or_default();
    compute_report_for_classes(&frames, threshold, &classes)
}

/// Dataset-level statistics for `info`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DatasetInfo {
    pub sequences: usize,
    pub frames: usize,
    pub taxonomy_size: usize,
    pub labels_per_class: BTreeMap<String, u64>,
    pub total_points: u64,
    pub total_floor_area_m2: f64,
    /// Frames whose points cover all eight 45° azimuth sectors.
    pub frames_full_azimuth: usize,
    /// Every point has a finite intensity in [0, 1].
    pub intensity_valid: bool,
    pub splits: BTreeMap<String, usize>,
}

/// Sector index 0..8 of the point's azimuth.
pub fn azimuth_octant(x: f32, y: f32) -> usize {
    let a = (y as f64).atan2(x as f64).rem_euclid(std::f64::consts::TAU);
    ((a / std::f64::consts::FRAC_PI_4) as usize).min(7)
}

pub fn dataset_info(root: &Path) -> Result<DatasetInfo> {
    let manifest = read_manifest(root)?;
    manifest.validate()?;
    let mut info = DatasetInfo {
        sequences: manifest.sequences.len(),
        frames: manifest.frame_count(),
        taxonomy_size: manifest.taxonomy.len(),
        intensity_valid: true,
        ..DatasetInfo::default()
    };
    for (split, frames) in &manifest.splits {
        let name = match split {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        };
        info.splits.insert(name.into(), frames.len());
    }
    for seq in &manifest.sequences {
        let dir = root.join(&seq.name);
        let scene_path = dir.join("scene.toml");
        if scene_path.exists() {
            info.total_floor_area_m2 += storage::read_scene(&scene_path)?.room.floor_area();
        }
        for k in 0..seq.frame_count {
            let id = frame_id(k);
            let cloud = read_cloud(&dir.join("velodyne").join(format!("{id}.bin")))?;
            info.total_points += cloud.len() as u64;
            let mut sectors = [false; 8];
            for p in &cloud.points {
                sectors[azimuth_octant(p.x, p.y)] = true;
                if !(0.0..=1.0).contains(&p.intensity) {
                    info.intensity_valid = false;
                }
            }
            if sectors.iter().all(|&s| s) {
                info.frames_full_azimuth += 1;
            }
            for b in read_labels(&dir.join("label_2").join(format!("{id}.txt")))? {
                *info.labels_per_class.entry(b.class_label).or_default() += 1;
            }
        }
    }
    Ok(info)
}

/// A sensor pose from `x,y,z,yaw` text.
pub fn parse_pose_arg(text: &str) -> Result<Pose> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad pose component {s:?}"))))
        .collect::<Result<_>>()?;
    match v.as_slice() {
        [x, y, z, yaw] if v.iter().all(|c| c.is_finite()) => Pose::new(Mat3::from_yaw(*yaw), Vec3::new(*x, *y, *z)),
        _ => Err(Error::invalid(format!("pose {text:?} must be four finite numbers x,y,z,yaw"))),
    }
}
