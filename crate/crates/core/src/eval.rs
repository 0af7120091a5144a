//! Rotated-box IoU, detection matching and the benchmark metric suite.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::LabeledBox;
use crate::error::{Error, Result};

/// Thresholds reported by `acc_at`, ascending.
pub const ACC_THRESHOLDS: [f64; 3] = [0.25, 0.5, 0.75];
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.25;

type P2 = [f64; 2];

fn check_box(b: &LabeledBox, with_height: bool) -> Result<()> {
    let dims_ok = b.length > 0.0
        && b.width > 0.0
        && b.length.is_finite()
        && b.width.is_finite()
        && (!with_height || (b.height > 0.0 && b.height.is_finite()));
    if !dims_ok {
        return Err(Error::invalid(format!("degenerate box {}: {} × {} × {}", b.class_label, b.length, b.width, b.height)));
    }
    if !b.center.is_finite() || !b.yaw.is_finite() {
        return Err(Error::invalid(format!("box {} has non-finite pose", b.class_label)));
    }
    Ok(())
}

/// Ground-plane rectangle, counter-clockwise.
fn footprint(b: &LabeledBox) -> [P2; 4] {
    let (s, c) = b.yaw.sin_cos();
    let (hl, hw) = (b.length / 2.0, b.width / 2.0);
    [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)].map(|(x, y)| [b.center.x + c * x - s * y, b.center.y + s * x + c * y])
}

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Shoelace area of a simple polygon (positive when counter-clockwise).
pub fn polygon_area(poly: &[P2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        twice += p[0] * q[1] - q[0] * p[1];
    }
    twice / 2.0
}

/// Sutherland–Hodgman: clips `subject` against the convex counter-clockwise `clip`.
pub fn clip_convex(subject: &[P2], clip: &[P2]) -> Vec<P2> {
    let mut out: Vec<P2> = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (dc, dp) = (cross(a, b, cur), cross(a, b, prev));
            if dc >= 0.0 {
                if dp < 0.0 {
                    out.push(lerp_at_zero(prev, cur, dp, dc));
                }
                out.push(cur);
            } else if dp >= 0.0 {
                out.push(lerp_at_zero(prev, cur, dp, dc));
            }
        }
    }
    out
}

fn lerp_at_zero(p: P2, q: P2, dp: f64, dq: f64) -> P2 {
    let t = dp / (dp - dq);
    [p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t]
}

fn same_footprint(a: &LabeledBox, b: &LabeledBox) -> bool {
    a.center.x == b.center.x && a.center.y == b.center.y && a.length == b.length && a.width == b.width && a.yaw == b.yaw
}

fn bev_overlap(a: &LabeledBox, b: &LabeledBox) -> (f64, f64, f64) {
    let (pa, pb) = (footprint(a), footprint(b));
    let area_a = polygon_area(&pa);
    let area_b = polygon_area(&pb);
    let inter = if same_footprint(a, b) { area_a } else { polygon_area(&clip_convex(&pa, &pb)).clamp(0.0, area_a.min(area_b)) };
    (inter, area_a, area_b)
}

/// IoU of the two boxes' ground-plane footprints.
pub fn iou_bev(a: &LabeledBox, b: &LabeledBox) -> Result<f64> {
    check_box(a, false)?;
    check_box(b, false)?;
    let (inter, area_a, area_b) = bev_overlap(a, b);
    Ok((inter / (area_a + area_b - inter)).clamp(0.0, 1.0))
}

/// IoU of two yaw-rotated boxes: footprint overlap × vertical overlap.
pub fn iou_3d(a: &LabeledBox, b: &LabeledBox) -> Result<f64> {
    check_box(a, true)?;
    check_box(b, true)?;
    let (area, area_a, area_b) = bev_overlap(a, b);
    let (a_lo, a_hi) = (a.center.z - a.height / 2.0, a.center.z + a.height / 2.0);
    let (b_lo, b_hi) = (b.center.z - b.height / 2.0, b.center.z + b.height / 2.0);
    // Heights taken from the rounded extents so a box against itself gives exactly 1.
    let inter = area * (a_hi.min(b_hi) - a_lo.max(b_lo)).max(0.0);
    let union = area_a * (a_hi - a_lo) + area_b * (b_hi - b_lo) - inter;
    Ok((inter / union).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub gt: usize,
    pub det: usize,
    pub iou: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchSet {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_gts: Vec<usize>,
    pub unmatched_dets: Vec<usize>,
}

/// Greedy matching by descending 3D IoU; ties go to the lower (gt, det) index.
pub fn match_frame(gts: &[LabeledBox], dets: &[LabeledBox], iou_threshold: f64, class_aware: bool) -> Result<MatchSet> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(Error::invalid(format!("IoU threshold {iou_threshold} outside (0, 1]")));
    }
    let mut candidates = Vec::new();
    for (g, gb) in gts.iter().enumerate() {
        for (d, db) in dets.iter().enumerate() {
            if class_aware && gb.class_label != db.class_label {
                continue;
            }
            let iou = iou_3d(gb, db)?;
            if iou >= iou_threshold {
                candidates.push(MatchedPair { gt: g, det: d, iou });
            }
        }
    }
    candidates.sort_by(|x, y| y.iou.total_cmp(&x.iou).then(x.gt.cmp(&y.gt)).then(x.det.cmp(&y.det)));
    let mut gt_used = vec![false; gts.len()];
    let mut det_used = vec![false; dets.len()];
    let mut pairs = Vec::new();
    for c in candidates {
        if !gt_used[c.gt] && !det_used[c.det] {
            gt_used[c.gt] = true;
            det_used[c.det] = true;
            pairs.push(c);
        }
    }
    let unmatched = |used: &[bool]| used.iter().enumerate().filter(|(_, u)| !**u).map(|(i, _)| i).collect();
    Ok(MatchSet { unmatched_gts: unmatched(&gt_used), unmatched_dets: unmatched(&det_used), pairs })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub match_threshold: f64,
    pub frames: usize,
    /// Pooled over all frames: TP / (TP + FP), 0 for classes without predictions.
    pub precision: BTreeMap<String, f64>,
    /// Pooled over all classes.
    pub overall_precision: f64,
    pub counts: BTreeMap<String, ClassCounts>,
    pub matched_pairs: u64,
    /// The box-quality metrics below are 0 when nothing matched.
    pub mean_iou: f64,
    /// Keys are the thresholds printed with two decimals ("0.25", "0.50", "0.75").
    pub acc_at: BTreeMap<String, f64>,
    /// Mean Manhattan distance between matched box centres (m).
    pub l1_error: f64,
    /// Mean squared Euclidean distance between matched box centres (m²).
    pub l2_error: f64,
}

pub type EvalFrame = (Vec<LabeledBox>, Vec<LabeledBox>);

pub fn compute_report(frames: &[EvalFrame], match_threshold: f64) -> Result<EvalReport> {
    compute_report_for_classes(frames, match_threshold, &[])
}

/// Like [`compute_report`], additionally listing `classes` even when they
/// never occur (they report precision 0).
pub fn compute_report_for_classes(frames: &[EvalFrame], match_threshold: f64, classes: &[String]) -> Result<EvalReport> {
    if frames.is_empty() {
        return Err(Error::invalid("evaluation needs at least one frame"));
    }
    let matches: Vec<MatchSet> =
        frames.par_iter().map(|(g, d)| match_frame(g, d, match_threshold, true)).collect::<Result<_>>()?;

    let mut names: BTreeSet<String> = classes.iter().cloned().collect();
    let mut counts: BTreeMap<String, ClassCounts> = BTreeMap::new();
    let mut ious = Vec::new();
    let mut l1 = Vec::new();
    let mut l2 = Vec::new();
    for ((gts, dets), m) in frames.iter().zip(&matches) {
        names.extend(gts.iter().chain(dets).map(|b| b.class_label.clone()));
        for p in &m.pairs {
            counts.entry(dets[p.det].class_label.clone()).or_default().tp += 1;
            let d = gts[p.gt].center - dets[p.det].center;
            ious.push(p.iou);
            l1.push(d.x.abs() + d.y.abs() + d.z.abs());
            l2.push(d.dot(d));
        }
        for &i in &m.unmatched_dets {
            counts.entry(dets[i].class_label.clone()).or_default().fp += 1;
        }
        for &i in &m.unmatched_gts {
            counts.entry(gts[i].class_label.clone()).or_default().fn_ += 1;
        }
    }
    for n in &names {
        counts.entry(n.clone()).or_default();
    }
    let ratio = |tp: u64, fp: u64| if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let precision = counts.iter().map(|(k, c)| (k.clone(), ratio(c.tp, c.fp))).collect();
    let (tp, fp) = counts.values().fold((0, 0), |(t, f), c| (t + c.tp, f + c.fp));

    let n = ious.len();
    // Sorting before summing makes the means independent of frame order.
    let mean = |v: &mut Vec<f64>| {
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(f64::total_cmp);
        v.iter().sum::<f64>() / v.len() as f64
    };
    let acc_at = ACC_THRESHOLDS
        .iter()
        .map(|&t| {
            let hits = ious.iter().filter(|&&i| i >= t).count();
            (format!("{t:.2}"), if n == 0 { 0.0 } else { hits as f64 / n as f64 })
        })
        .collect();
    Ok(EvalReport {
        match_threshold,
        frames: frames.len(),
        precision,
        overall_precision: ratio(tp, fp),
        counts,
        matched_pairs: n as u64,
        mean_iou: mean(&mut ious),
        acc_at,
        l1_error: mean(&mut l1),
        l2_error: mean(&mut l2),
    })
}

impl EvalReport {
    pub fn acc(&self, threshold: f64) -> Option<f64> {
        self.acc_at.get(&format!("{threshold:.2}")).copied()
    }

    /// Human-readable table: per-class precision rows, then the box metrics.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let width = self.precision.keys().map(|k| k.len()).max().unwrap_or(0).max(16) + 2;
        let _ = writeln!(s, "Classification Precision (P)");
        for (class, p) in &self.precision {
            let c = self.counts[class];
            let _ = writeln!(s, "  {class:<width$}{p:>8.4}   TP {:>6}  FP {:>6}  FN {:>6}", c.tp, c.fp, c.fn_);
        }
        let _ = writeln!(s, "  {:<width$}{:>8.4}", "(all classes)", self.overall_precision);
        let _ = writeln!(s, "{:<w$}{:>8.4}", "Mean IoU", self.mean_iou, w = width + 2);
        for (k, v) in &self.acc_at {
            let _ = writeln!(s, "{:<w$}{v:>8.4}", format!("Acc@IoU{k}"), w = width + 2);
        }
        let _ = writeln!(s, "{:<w$}{:>8.4}", "L1", self.l1_error, w = width + 2);
        let _ = writeln!(s, "{:<w$}{:>8.4}", "L2", self.l2_error, w = width + 2);
        let _ =
            writeln!(s, "({} frames, {} matched pairs, match IoU ≥ {})", self.frames, self.matched_pairs, self.match_threshold);
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
