//! Command-line front end. `run_cli` returns the process exit code:
//! 0 on success, 1 on a validation or I/O failure (one-line diagnostic on
//! stderr), 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::annotate::extract_annotations;
use crate::bev::{rasterize_bev, BevExtent};
use crate::error::{Error, Result};
use crate::eval::DEFAULT_MATCH_THRESHOLD;
use crate::geometry::SceneIndex;
use crate::pipeline::{self, parse_pose_arg, RunConfig, WORKERS_ENV};
use crate::scene::{generate_scene, SceneConfig};
use crate::sensor::{build_scan_pattern, simulate_scan, SensorConfig};
use crate::storage::{self, frame_id, FrameRecord, SequenceWriter};

#[derive(Debug, Parser)]
#[command(name = "roomcast", version, about = "Synthetic indoor LiDAR datasets and detection benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate one scene from a scene config and seed.
    GenerateScene {
        /// Scene config (TOML); built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output scene file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate one frame of a scene and write it into a sequence directory.
    Scan {
        #[arg(long)]
        scene: PathBuf,
        /// Sensor pose in room coordinates: x,y,z,yaw.
        #[arg(long, default_value = "0,0,0.6,0", allow_hyphen_values = true)]
        pose: String,
        /// Sensor config (TOML); built-in defaults when omitted.
        #[arg(long)]
        sensor: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        frame: usize,
        #[arg(long, default_value_t = 0)]
        timestamp_ns: u64,
        #[arg(long, default_value_t = 5)]
        min_points: u32,
        /// Dataset root; the frame goes to <out>/<sequence>/.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "0000")]
        sequence: String,
    },
    /// Generate a full dataset: scenes, frames, labels, manifest and splits.
    Dataset {
        /// Run config (TOML); flags below override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        scenes: Option<usize>,
        #[arg(long)]
        frames_per_scene: Option<usize>,
        #[arg(long)]
        frame_period_ns: Option<u64>,
        #[arg(long)]
        min_points: Option<u32>,
        /// Worker threads; output does not depend on this.
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
    /// Evaluate detections against ground truth label files.
    Eval {
        /// Ground truth: a dataset root or a directory of label files.
        #[arg(long)]
        gt: PathBuf,
        /// Detections laid out like the ground truth (16th field = score).
        #[arg(long)]
        det: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MATCH_THRESHOLD)]
        threshold: f64,
        /// Directory for report.txt and report.json; stdout only when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rasterize one point cloud into a bird's-eye-view grid.
    Bev {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        cell: f64,
        /// x_min,x_max,y_min,y_max in meters.
        #[arg(long, default_value = "-25,25,-25,25", allow_hyphen_values = true)]
        extent: String,
        /// Output stem; writes <stem>.bin and <stem>.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a dataset.
    Info {
        #[arg(long)]
        root: PathBuf,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            1
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn load_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenerateScene { config, seed, out } => {
            let cfg: SceneConfig = config.as_deref().map(load_toml).transpose()?.unwrap_or_default();
            let (scene, log) = generate_scene(&cfg, seed)?;
            storage::write_scene(&scene, &out)?;
            println!("{}: {} objects placed, {} dropped", out.display(), log.placed, log.drops.len());
            Ok(())
        }
        Command::Scan { scene, pose, sensor, seed, frame, timestamp_ns, min_points, out, sequence } => {
            let scene = storage::read_scene(&scene)?;
            let sensor: SensorConfig = sensor.as_deref().map(load_toml).transpose()?.unwrap_or_default();
            let pose = parse_pose_arg(&pose)?;
            let index = SceneIndex::build(&scene)?;
            let pattern = build_scan_pattern(&sensor)?;
            let mut scan = simulate_scan(&index, &pose, &pattern, &sensor, seed, frame as u64)?;
            scan.cloud.timestamp_ns = timestamp_ns;
            let labels = extract_annotations(&scene, &scan, min_points)?;
            let writer = SequenceWriter::open(&out, &sequence)?;
            let record =
                FrameRecord { sequence, frame_id: frame_id(frame), cloud: scan.cloud, labels, timestamp_ns, sensor_pose: pose };
            writer.write_frame(&record)?;
            println!(
                "{}: {} points, {} labels",
                writer.cloud_path(&record.frame_id).display(),
                record.cloud.len(),
                record.labels.len()
            );
            Ok(())
        }
        Command::Dataset { config, out, seed, scenes, frames_per_scene, frame_period_ns, min_points, workers } => {
            let mut cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = scenes {
                cfg.scenes = v;
            }
            if let Some(v) = frames_per_scene {
                cfg.frames_per_scene = v;
            }
            if let Some(v) = frame_period_ns {
                cfg.frame_period_ns = v;
            }
            if let Some(v) = min_points {
                cfg.min_points = v;
            }
            let s = pipeline::run_dataset(&cfg, &out, workers)?;
            println!(
                "{}: {} sequences, {} frames, {} points, {} labels",
                out.display(),
                s.sequences,
                s.frames,
                s.points,
                s.labels
            );
            Ok(())
        }
        Command::Eval { gt, det, threshold, out } => {
            let report = pipeline::evaluate_dirs(&gt, &det, threshold)?;
            let table = report.render_table();
            print!("{table}");
            if let Some(dir) = out {
                fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                let txt = dir.join("report.txt");
                let json = dir.join("report.json");
                fs::write(&txt, &table).map_err(|e| Error::io(&txt, e))?;
                fs::write(&json, report.to_json()).map_err(|e| Error::io(&json, e))?;
            }
            Ok(())
        }
        Command::Bev { cloud, cell, extent, out } => {
            let e: Vec<f64> = extent
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad extent component {s:?}"))))
                .collect::<Result<_>>()?;
            let [x0, x1, y0, y1] = e[..] else {
                return Err(Error::invalid("extent must be x_min,x_max,y_min,y_max"));
            };
            let grid = rasterize_bev(&storage::read_cloud(&cloud)?, cell, BevExtent::new(x0, x1, y0, y1))?;
            grid.export(&out)?;
            println!(
                "{}: {} × {} cells, {} points dropped",
                out.with_extension("bin").display(),
                grid.rows,
                grid.cols,
                grid.dropped
            );
            Ok(())
        }
        Command::Info { root, json } => {
            let info = pipeline::dataset_info(&root)?;
            let mut o = std::io::stdout().lock();
            if json {
                let _ = writeln!(o, "{}", serde_json::to_string_pretty(&info).expect("info serializes"));
                return Ok(());
            }
            let _ = writeln!(o, "sequences         {}", info.sequences);
            let _ = writeln!(o, "frames            {}", info.frames);
            let _ = writeln!(o, "classes           {}", info.taxonomy_size);
            let _ = writeln!(o, "extent (m²)       {:.1}", info.total_floor_area_m2);
            let _ = writeln!(o, "points            {}", info.total_points);
            let _ = writeln!(o, "360° frames       {}/{}", info.frames_full_azimuth, info.frames);
            let _ = writeln!(o, "intensity         {}", if info.intensity_valid { "yes" } else { "INVALID" });
            for (split, n) in &info.splits {
                let _ = writeln!(o, "split {split:<11} {n}");
            }
            for (class, n) in &info.labels_per_class {
                let _ = writeln!(o, "labels {class:<10} {n}");
            }
            Ok(())
        }
    }
}
