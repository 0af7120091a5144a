//! On-disk dataset formats.
//!
//! Layout of one sequence under a dataset root:
//!
//! ```text
//! <root>/<sequence>/velodyne/<frame_id>.bin   N × (x, y, z, intensity) f32 little-endian
//! <root>/<sequence>/label_2/<frame_id>.txt    one KITTI-style label line per object
//! <root>/<sequence>/times.txt                 "<frame_id> <timestamp_ns>" per frame
//! <root>/<sequence>/poses.txt                 row-major 3×4 sensor pose per frame
//! <root>/<sequence>/scene.toml                scene description
//! <root>/manifest.toml                        sequences, splits, taxonomy
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::annotate::{format_label_file, parse_label_file, GtBox, LabeledBox};
use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::scene::Scene;
use crate::sensor::{Point, PointCloud};

pub const FORMAT_VERSION: &str = "1.0";
pub const POINT_RECORD_BYTES: usize = 16;

/// Six-digit zero-padded frame id.
pub fn frame_id(index: usize) -> String {
    format!("{index:06}")
}

fn is_frame_id(s: &str) -> bool {
    s.len() == 6 && s.bytes().all(|b| b.is_ascii_digit())
}

pub fn encode_cloud(points: &[Point]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(points.len() * POINT_RECORD_BYTES);
    for p in points {
        for v in [p.x, p.y, p.z, p.intensity] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

pub fn write_cloud(cloud: &PointCloud, path: &Path) -> Result<()> {
    fs::write(path, encode_cloud(&cloud.points)).map_err(|e| Error::io(path, e))
}

pub fn decode_cloud(bytes: &[u8], path: &Path) -> Result<PointCloud> {
    if !bytes.len().is_multiple_of(POINT_RECORD_BYTES) {
        return Err(Error::CorruptCloud { path: path.to_path_buf(), len: bytes.len() as u64 });
    }
    let mut bad = Vec::new();
    let points: Vec<Point> = bytes
        .chunks_exact(POINT_RECORD_BYTES)
        .enumerate()
        .map(|(i, rec)| {
            let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap());
            let p = Point { x: f(0), y: f(1), z: f(2), intensity: f(3) };
            if ![p.x, p.y, p.z, p.intensity].iter().all(|v| v.is_finite()) {
                bad.push(i);
            }
            p
        })
        .collect();
    if !bad.is_empty() {
        return Err(Error::NonFinitePoints { path: path.to_path_buf(), indices: bad });
    }
    Ok(PointCloud::from_points(points))
}

pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_cloud(&bytes, path)
}

pub fn write_labels(boxes: &[LabeledBox], path: &Path) -> Result<()> {
    fs::write(path, format_label_file(boxes)?).map_err(|e| Error::io(path, e))
}

pub fn read_labels(path: &Path) -> Result<Vec<LabeledBox>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_label_file(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })
}

/// `poses.txt` line: 12 reals, shortest round-trip decimal form.
pub fn format_pose_line(pose: &Pose) -> String {
    let vals: Vec<String> = pose.to_matrix_3x4().iter().map(|v| format!("{}", v + 0.0)).collect();
    vals.join(" ")
}

pub fn parse_pose_line(line: &str) -> std::result::Result<Pose, String> {
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|f| f.parse::<f64>().map_err(|_| format!("not a number: {f:?}")))
        .collect::<std::result::Result<_, _>>()?;
    let m: [f64; 12] = vals.try_into().map_err(|v: Vec<f64>| format!("expected 12 values, found {}", v.len()))?;
    Pose::from_matrix_3x4_lenient(&m, 1e-6).map_err(|e| e.to_string())
}

pub fn read_poses(path: &Path) -> Result<Vec<Pose>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_pose_line(l).map_err(|m| Error::Parse { path: path.to_path_buf(), message: format!("line {}: {m}", i + 1) })
        })
        .collect()
}

/// `(frame_id, timestamp_ns)` pairs from `times.txt`.
pub fn read_times(path: &Path) -> Result<Vec<(String, u64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let bad = |m: &str| Error::Parse { path: path.to_path_buf(), message: format!("line {}: {m}", i + 1) };
            let mut it = l.split_whitespace();
            let (Some(id), Some(ts), None) = (it.next(), it.next(), it.next()) else {
                return Err(bad("expected \"<frame_id> <timestamp_ns>\""));
            };
            let ts = ts.parse::<u64>().map_err(|_| bad("timestamp is not an unsigned integer"))?;
            Ok((id.to_string(), ts))
        })
        .collect()
}

/// One frame of a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub sequence: String,
    pub frame_id: String,
    pub cloud: PointCloud,
    pub labels: Vec<GtBox>,
    pub timestamp_ns: u64,
    pub sensor_pose: Pose,
}

#[derive(Debug, Default)]
struct SequenceState {
    frame_ids: HashSet<String>,
    last_timestamp: Option<u64>,
}

/// Writes frames of one sequence. Distinct frames may be written from several
/// threads; appends to `times.txt` and `poses.txt` are serialised by a lock
/// and happen in call order.
#[derive(Debug)]
pub struct SequenceWriter {
    dir: PathBuf,
    name: String,
    state: Mutex<SequenceState>,
}

impl SequenceWriter {
    /// Opens (creating if needed) `<root>/<sequence>`, picking up frames already on disk.
    pub fn open(root: &Path, sequence: &str) -> Result<Self> {
        if sequence.is_empty() || sequence.contains(['/', '\\']) || sequence.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!("bad sequence name {sequence:?}")));
        }
        let dir = root.join(sequence);
        for sub in ["velodyne", "label_2"] {
            let d = dir.join(sub);
            fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        }
        let mut state = SequenceState::default();
        let times = dir.join("times.txt");
        if times.exists() {
            for (id, ts) in read_times(&times)? {
                state.frame_ids.insert(id);
                state.last_timestamp = Some(ts);
            }
        }
        Ok(SequenceWriter { dir, name: sequence.to_string(), state: Mutex::new(state) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn cloud_path(&self, frame_id: &str) -> PathBuf {
        self.dir.join("velodyne").join(format!("{frame_id}.bin"))
    }

    pub fn label_path(&self, frame_id: &str) -> PathBuf {
        self.dir.join("label_2").join(format!("{frame_id}.txt"))
    }

    pub fn write_frame(&self, record: &FrameRecord) -> Result<()> {
        if record.sequence != self.name {
            return Err(Error::invalid(format!(
                "frame belongs to sequence {:?}, writer is for {:?}",
                record.sequence, self.name
            )));
        }
        let id = &record.frame_id;
        if !is_frame_id(id) {
            return Err(Error::invalid(format!("frame id {id:?} is not six decimal digits")));
        }
        let cloud_path = self.cloud_path(id);
        {
            let mut state = self.state.lock().expect("sequence writer lock poisoned");
            if state.frame_ids.contains(id) || cloud_path.exists() {
                return Err(Error::Conflict { path: cloud_path, frame_id: id.clone() });
            }
            if let Some(last) = state.last_timestamp {
                if record.timestamp_ns <= last {
                    return Err(Error::Consistency(format!(
                        "frame {id} timestamp {} does not follow {last}",
                        record.timestamp_ns
                    )));
                }
            }
            let times = self.dir.join("times.txt");
            let poses = self.dir.join("poses.txt");
            append_line(&times, &format!("{id} {}", record.timestamp_ns))?;
            append_line(&poses, &format_pose_line(&record.sensor_pose))?;
            state.frame_ids.insert(id.clone());
            state.last_timestamp = Some(record.timestamp_ns);
        }
        write_cloud(&record.cloud, &cloud_path)?;
        let labels: Vec<LabeledBox> = record.labels.iter().map(|g| g.bbox.clone()).collect();
        write_labels(&labels, &self.label_path(id))
    }
}

fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
    writeln!(f, "{line}").map_err(|e| Error::io(path, e))
}

/// Writes one frame under `<dataset_root>/<record.sequence>/`.
pub fn write_frame(record: &FrameRecord, dataset_root: &Path) -> Result<()> {
    SequenceWriter::open(dataset_root, &record.sequence)?.write_frame(record)
}

pub fn write_scene(scene: &Scene, path: &Path) -> Result<()> {
    let text = toml::to_string(scene).map_err(|e| Error::invalid(format!("cannot encode scene: {e}")))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads a scene description. Every object class must be in the scene's
/// taxonomy; geometric validity is left to `validate_scene`.
pub fn read_scene(path: &Path) -> Result<Scene> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scene(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse { path: path.to_path_buf(), message },
        other => other,
    })
}

pub fn parse_scene(text: &str) -> Result<Scene> {
    let scene: Scene = toml::from_str(text).map_err(|e| Error::Parse { path: PathBuf::new(), message: e.to_string() })?;
    let taxonomy: HashSet<&str> = scene.taxonomy.iter().map(String::as_str).collect();
    if let Some(o) = scene.objects.iter().find(|o| !taxonomy.contains(o.class_label.as_str())) {
        return Err(Error::Taxonomy { label: o.class_label.clone() });
    }
    Ok(scene)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub name: String,
    pub frame_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: String,
    /// Tool name and version that wrote the dataset.
    #[serde(default)]
    pub generator: String,
    pub taxonomy: Vec<String>,
    pub sequences: Vec<SequenceEntry>,
    /// Frames per split as `"<sequence>/<frame_id>"`.
    pub splits: BTreeMap<Split, Vec<String>>,
}

impl DatasetManifest {
    /// Checks that splits are disjoint and cover every frame of every sequence.
    pub fn validate(&self) -> Result<()> {
        let mut all = HashSet::new();
        for s in &self.sequences {
            for i in 0..s.frame_count {
                all.insert(format!("{}/{}", s.name, frame_id(i)));
            }
        }
        let mut seen = HashSet::new();
        for frames in self.splits.values() {
            for f in frames {
                if !seen.insert(f.as_str()) {
                    return Err(Error::Consistency(format!("frame {f} assigned to more than one split")));
                }
                if !all.contains(f) {
                    return Err(Error::Consistency(format!("split lists unknown frame {f}")));
                }
            }
        }
        if seen.len() != all.len() {
            return Err(Error::Consistency(format!("splits cover {} of {} frames", seen.len(), all.len())));
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        self.sequences.iter().map(|s| s.frame_count).sum()
    }
}

pub fn write_manifest(m: &DatasetManifest, root: &Path) -> Result<()> {
    m.validate()?;
    let path = root.join("manifest.toml");
    let text = toml::to_string(m).map_err(|e| Error::invalid(format!("cannot encode manifest: {e}")))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(root: &Path) -> Result<DatasetManifest> {
    let path = root.join("manifest.toml");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    toml::from_str(&text).map_err(|e| Error::Parse { path, message: e.to_string() })
}

/// Serde adapter for `u64` values that may exceed TOML's signed 64-bit integers:
/// written as an integer when it fits, otherwise as a decimal string.
pub(crate) mod u64_compat {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        if *v <= i64::MAX as u64 {
            s.serialize_i64(*v as i64)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(v),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
