//! Sobel edge maps, optimal-threshold binarization and edge-frame differences.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::frame_io::{Frame, FrameSequence};

/// Sobel gradient magnitude per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFrame {
    pub width: usize,
    pub height: usize,
    pub magnitudes: Vec<f32>,
}

impl EdgeFrame {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.magnitudes[y * self.width + x]
    }

    pub fn max(&self) -> f32 {
        self.magnitudes.iter().copied().fold(0.0, f32::max)
    }

    /// Magnitudes linearly rescaled from `[0, max]` onto `0..=255`.
    pub fn quantized(&self) -> Vec<u8> {
        let max = self.max();
        if max <= 0.0 {
            return vec![0; self.magnitudes.len()];
        }
        let scale = 255.0 / max;
        self.magnitudes
            .iter()
            .map(|&m| (m * scale).round().min(255.0) as u8)
            .collect()
    }
}

/// Edge bitmap, one byte per pixel holding 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryEdgeFrame {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<u8>,
}

impl BinaryEdgeFrame {
    pub fn zeros(width: usize, height: usize) -> Self {
        BinaryEdgeFrame {
            width,
            height,
            bits: vec![0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.bits[y * self.width + x] = on as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    /// 0/255 view, handy for dumping.
    pub fn to_gray(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| if b != 0 { 255 } else { 0 }).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = BinaryEdgeFrame::zeros(self.height, self.width);
        for y in 0..self.height {
            for x in 0..self.width {
                out.bits[x * self.height + y] = self.bits[y * self.width + x];
            }
        }
        out
    }
}

/// Sobel magnitude `sqrt(Cx^2 + Cy^2)` with replicated borders.
pub fn sobel_edge_map(frame: &Frame) -> Result<EdgeFrame> {
    let (w, h) = (frame.width(), frame.height());
    if w < 3 || h < 3 {
        return Err(Error::FrameTooSmall {
            width: w,
            height: h,
        });
    }
    let px = frame.pixels();
    // padded copy, one pixel of replication on every side
    let pw = w + 2;
    let mut padded = vec![0i32; pw * (h + 2)];
    for py in 0..h + 2 {
        let sy = py.saturating_sub(1).min(h - 1);
        let src = &px[sy * w..(sy + 1) * w];
        let row = &mut padded[py * pw..(py + 1) * pw];
        row[0] = i32::from(src[0]);
        row[pw - 1] = i32::from(src[w - 1]);
        for (d, &s) in row[1..=w].iter_mut().zip(src) {
            *d = i32::from(s);
        }
    }

    let mut magnitudes = vec![0f32; w * h];
    for y in 0..h {
        let up = &padded[y * pw..(y + 1) * pw];
        let mid = &padded[(y + 1) * pw..(y + 2) * pw];
        let down = &padded[(y + 2) * pw..(y + 3) * pw];
        let out = &mut magnitudes[y * w..(y + 1) * w];
        for x in 0..w {
            let cx = (up[x + 2] + 2 * mid[x + 2] + down[x + 2]) - (up[x] + 2 * mid[x] + down[x]);
            let cy = (down[x] + 2 * down[x + 1] + down[x + 2]) - (up[x] + 2 * up[x + 1] + up[x + 2]);
            out[x] = ((cx * cx + cy * cy) as f32).sqrt();
        }
    }
    Ok(EdgeFrame {
        width: w,
        height: h,
        magnitudes,
    })
}

/// Otsu threshold over a 256-bin histogram.
///
/// Returns the smallest level `t` minimizing the within-class variance of
/// `{v <= t}` and `{v > t}`. Levels below the smallest populated bin are not
/// considered, so a single-valued histogram yields that value. Scores are
/// compared exactly in integer arithmetic. An empty histogram yields 0.
pub fn otsu_threshold(hist: &[u64; 256]) -> u8 {
    let n: u128 = hist.iter().map(|&c| u128::from(c)).sum();
    if n == 0 {
        return 0;
    }
    let total_sum: u128 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as u128 * u128::from(c))
        .sum();

    // Maximizing S0^2/n0 + S1^2/n1 is the same as minimizing the within-class
    // sum of squares (which is sum(v^2) minus that quantity).
    let mut best: Option<(u8, u128, u128)> = None;
    let (mut n0, mut s0) = (0u128, 0u128);
    for (t, &c) in hist.iter().enumerate() {
        n0 += u128::from(c);
        s0 += t as u128 * u128::from(c);
        if n0 == 0 {
            continue;
        }
        let n1 = n - n0;
        let s1 = total_sum - s0;
        let (num, den) = if n1 == 0 {
            (s0 * s0, n0)
        } else {
            (s0 * s0 * n1 + s1 * s1 * n0, n0 * n1)
        };
        let better = match best {
            None => true,
            Some((_, bnum, bden)) => frac_gt(num, den, bnum, bden),
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    best.map(|(t, _, _)| t).unwrap_or(0)
}

/// `a/b > c/d` without forming `a*d`, which overflows for multi-megapixel frames.
fn frac_gt(a: u128, b: u128, c: u128, d: u128) -> bool {
    let (qa, qc) = (a / b, c / d);
    if qa != qc {
        return qa > qc;
    }
    (a % b) * d > (c % d) * b
}

/// Otsu threshold of a list of gray levels.
pub fn optimal_threshold(values: &[u8]) -> u8 {
    let mut hist = [0u64; 256];
    for &v in values {
        hist[v as usize] += 1;
    }
    otsu_threshold(&hist)
}

fn threshold_levels(levels: &[u8], width: usize, height: usize, t: u8) -> BinaryEdgeFrame {
    BinaryEdgeFrame {
        width,
        height,
        bits: levels.iter().map(|&q| u8::from(q > t)).collect(),
    }
}

/// Sets a bit wherever the quantized magnitude exceeds `t`.
pub fn binarize(edge: &EdgeFrame, t: u8) -> BinaryEdgeFrame {
    threshold_levels(&edge.quantized(), edge.width, edge.height, t)
}

/// Binarizes at the Otsu threshold of the quantized magnitudes; returns the
/// threshold alongside the bitmap.
pub fn binarize_optimal(edge: &EdgeFrame) -> (BinaryEdgeFrame, u8) {
    let levels = edge.quantized();
    let t = optimal_threshold(&levels);
    (threshold_levels(&levels, edge.width, edge.height, t), t)
}

/// Edges present in `next` but absent from `prev`.
pub fn edge_difference(prev: &BinaryEdgeFrame, next: &BinaryEdgeFrame) -> Result<BinaryEdgeFrame> {
    if prev.width != next.width || prev.height != next.height {
        return Err(Error::DimensionMismatch {
            expected_w: prev.width,
            expected_h: prev.height,
            actual_w: next.width,
            actual_h: next.height,
        });
    }
    let bits = prev
        .bits
        .iter()
        .zip(&next.bits)
        .map(|(&p, &n)| u8::from(n != 0 && p == 0))
        .collect();
    Ok(BinaryEdgeFrame {
        width: next.width,
        height: next.height,
        bits,
    })
}

/// Full per-frame edge stage: Sobel, quantize, Otsu, threshold.
pub fn binary_edges(frame: &Frame) -> Result<BinaryEdgeFrame> {
    Ok(binarize_optimal(&sobel_edge_map(frame)?).0)
}

/// Indexed access to per-frame binary edge maps.
pub trait EdgeSource: Sync {
    fn binary_edges(&self, index: usize) -> Result<Arc<BinaryEdgeFrame>>;

    fn count(&self) -> usize;
}

/// Memoizing edge-map source over a frame sequence.
pub struct EdgeCache<'a> {
    seq: &'a FrameSequence,
    maps: Mutex<HashMap<usize, Arc<BinaryEdgeFrame>>>,
}

impl<'a> EdgeCache<'a> {
    pub fn new(seq: &'a FrameSequence) -> Self {
        EdgeCache {
            seq,
            maps: Mutex::new(HashMap::new()),
        }
    }

    /// Drops cached maps for frames before `index`.
    pub fn evict_before(&self, index: usize) {
        self.maps.lock().expect("edge cache poisoned").retain(|&k, _| k >= index);
    }

    pub fn len(&self) -> usize {
        self.maps.lock().expect("edge cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl EdgeSource for EdgeCache<'_> {
    fn binary_edges(&self, index: usize) -> Result<Arc<BinaryEdgeFrame>> {
        if let Some(map) = self.maps.lock().expect("edge cache poisoned").get(&index) {
            return Ok(Arc::clone(map));
        }
        let map = Arc::new(binary_edges(&*self.seq.frame(index)?)?);
        self.maps
            .lock()
            .expect("edge cache poisoned")
            .insert(index, Arc::clone(&map));
        Ok(map)
    }

    fn count(&self) -> usize {
        self.seq.count()
    }
}
