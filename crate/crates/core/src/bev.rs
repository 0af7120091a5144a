//! Bird's-eye-view rasterization.
//!
//! Cells are half-open: point `(x, y)` lands in column
//! `floor((x − x_min) / cell)` and row `floor((y − y_min) / cell)`; points with
//! `x ∉ [x_min, x_max)` or `y ∉ [y_min, y_max)` are dropped. When the extent is
//! not a whole number of cells the last row/column is partial.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensor::{Point, PointCloud};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BevExtent {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl BevExtent {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        BevExtent { x_min, x_max, y_min, y_max }
    }

    /// Square extent `[-half, half)²`.
    pub fn centered(half: f64) -> Self {
        BevExtent::new(-half, half, -half, half)
    }
}

/// Exact sum of non-negative `f32` values: a 192-bit fixed-point integer in
/// units of 2⁻¹⁴⁹, wide enough for 2⁴² values of at most 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct ExactSum([u64; 3]);

impl ExactSum {
    fn add_f32(&mut self, v: f32) {
        debug_assert!(v >= 0.0 && v.is_finite());
        let bits = v.to_bits();
        let exp = (bits >> 23) & 0xff;
        let frac = (bits & 0x7f_ffff) as u64;
        // value = mant · 2^(shift − 149)
        let (mant, shift) = if exp == 0 { (frac, 0) } else { (frac | 0x80_0000, exp - 1) };
        if mant == 0 {
            return;
        }
        let wide = (mant as u128) << (shift % 64);
        let limb = (shift / 64) as usize;
        self.add_at(limb, wide as u64);
        if limb + 1 < 3 {
            self.add_at(limb + 1, (wide >> 64) as u64);
        }
    }

    fn add_at(&mut self, mut limb: usize, mut v: u64) {
        while v != 0 && limb < 3 {
            let (s, carry) = self.0[limb].overflowing_add(v);
            self.0[limb] = s;
            v = carry as u64;
            limb += 1;
        }
    }

    fn merge(&mut self, o: &ExactSum) {
        for i in 0..3 {
            self.add_at(i, o.0[i]);
        }
    }

    /// Correctly rounded conversion to `f64`.
    fn to_f64(self) -> f64 {
        let [l0, l1, l2] = self.0;
        let top = if l2 != 0 {
            2
        } else if l1 != 0 {
            1
        } else {
            0
        };
        let limbs = [l0, l1, l2];
        if limbs[top] == 0 {
            return 0.0;
        }
        // Bit position of the most significant one across the 192-bit value.
        let msb = 64 * top as i32 + 63 - limbs[top].leading_zeros() as i32;
        let low = (msb - 63).max(0);
        let window = extract_u64(&limbs, low);
        // Sticky bit: any one below the window forces round-away from a tie.
        let sticky = low > 0 && any_bits_below(&limbs, low);
        let v = (window | sticky as u64) as f64;
        v * 2f64.powi(low - 149)
    }
}

fn extract_u64(limbs: &[u64; 3], low: i32) -> u64 {
    let (idx, off) = ((low / 64) as usize, (low % 64) as u32);
    let lo = limbs[idx] >> off;
    let hi = if off > 0 && idx + 1 < 3 { limbs[idx + 1] << (64 - off) } else { 0 };
    lo | hi
}

fn any_bits_below(limbs: &[u64; 3], low: i32) -> bool {
    let (idx, off) = ((low / 64) as usize, (low % 64) as u32);
    limbs[..idx].iter().any(|&l| l != 0) || (off > 0 && limbs[idx] & ((1u64 << off) - 1) != 0)
}

#[derive(Clone, Debug)]
struct Partial {
    density: Vec<u32>,
    max_height: Vec<f32>,
    sums: Vec<ExactSum>,
    dropped: u64,
}

impl Partial {
    fn new(cells: usize) -> Self {
        Partial {
            density: vec![0; cells],
            max_height: vec![f32::NEG_INFINITY; cells],
            sums: vec![ExactSum::default(); cells],
            dropped: 0,
        }
    }

    fn merge(mut self, o: Partial) -> Partial {
        for i in 0..self.density.len() {
            self.density[i] += o.density[i];
            self.max_height[i] = self.max_height[i].max(o.max_height[i]);
            self.sums[i].merge(&o.sums[i]);
        }
        self.dropped += o.dropped;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BevGrid {
    pub cell_size: f64,
    pub extent: BevExtent,
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `rows × cols`; `−∞` in empty cells.
    pub max_height: Vec<f32>,
    /// Row-major mean of point intensities; 0 in empty cells.
    pub mean_intensity: Vec<f32>,
    /// Row-major point counts.
    pub density: Vec<u32>,
    /// Points outside the extent.
    pub dropped: u64,
}

const PAR_CHUNK: usize = 16_384;

pub fn rasterize_bev(cloud: &PointCloud, cell_size: f64, extent: BevExtent) -> Result<BevGrid> {
    rasterize_points(&cloud.points, cell_size, extent)
}

pub fn rasterize_points(points: &[Point], cell_size: f64, extent: BevExtent) -> Result<BevGrid> {
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(Error::invalid(format!("cell size {cell_size} must be finite and positive")));
    }
    let BevExtent { x_min, x_max, y_min, y_max } = extent;
    if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) || x_max <= x_min || y_max <= y_min {
        return Err(Error::invalid(format!("degenerate BEV extent {extent:?}")));
    }
    let cols = ((x_max - x_min) / cell_size).ceil() as usize;
    let rows = ((y_max - y_min) / cell_size).ceil() as usize;
    let cells = rows
        .checked_mul(cols)
        .filter(|&c| c <= 1 << 28)
        .ok_or_else(|| Error::invalid(format!("BEV grid {rows} × {cols} is too large")))?;

    let bin = |chunk: &[Point]| {
        let mut part = Partial::new(cells);
        for p in chunk {
            let (x, y) = (p.x as f64, p.y as f64);
            if !(x >= x_min && x < x_max && y >= y_min && y < y_max) {
                part.dropped += 1;
                continue;
            }
            // Rounding can push a point just below the max edge onto the
            // next index; it belongs to the last cell.
            let c = (((x - x_min) / cell_size).floor() as usize).min(cols - 1);
            let r = (((y - y_min) / cell_size).floor() as usize).min(rows - 1);
            let k = r * cols + c;
            part.density[k] += 1;
            part.max_height[k] = part.max_height[k].max(p.z);
            part.sums[k].add_f32(p.intensity.clamp(0.0, 1.0));
        }
        part
    };
    let total = if points.len() <= PAR_CHUNK {
        bin(points)
    } else {
        points.par_chunks(PAR_CHUNK).map(bin).reduce(|| Partial::new(cells), Partial::merge)
    };
    let mean_intensity =
        total.density.iter().zip(&total.sums).map(|(&n, s)| if n == 0 { 0.0 } else { (s.to_f64() / n as f64) as f32 }).collect();
    Ok(BevGrid {
        cell_size,
        extent,
        rows,
        cols,
        max_height: total.max_height,
        mean_intensity,
        density: total.density,
        dropped: total.dropped,
    })
}

impl BevGrid {
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Text header describing the binary layout.
    pub fn header(&self) -> String {
        let e = self.extent;
        format!(
            "format roomcast-bev 1\nrows {}\ncols {}\ncell_size {}\nextent {} {} {} {}\n\
             dtype float32 little-endian row-major\nchannels max_height mean_intensity density\n\
             empty_max_height -inf\ndropped {}\n",
            self.rows, self.cols, self.cell_size, e.x_min, e.x_max, e.y_min, e.y_max, self.dropped
        )
    }

    /// The three channels back to back as little-endian `f32`
    /// (max height, mean intensity, density).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.density.len() * 12);
        for v in &self.max_height {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.mean_intensity {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &v in &self.density {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }

    /// Writes `<stem>.bin` and `<stem>.txt` next to each other.
    pub fn export(&self, stem: &Path) -> Result<()> {
        let bin = stem.with_extension("bin");
        let txt = stem.with_extension("txt");
        fs::write(&bin, self.to_bytes()).map_err(|e| Error::io(&bin, e))?;
        fs::write(&txt, self.header()).map_err(|e| Error::io(&txt, e))
    }
}
