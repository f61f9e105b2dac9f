//! Histogram-difference trigger between consecutive frames.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame_io::Frame;

/// Default trigger threshold on the normalized histogram difference.
pub const DEFAULT_THETA: f64 = 0.003;

/// 256-bin gray-level histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    bins: [u64; 256],
}

impl Histogram {
    pub fn from_bins(bins: [u64; 256]) -> Self {
        Histogram { bins }
    }

    pub fn bins(&self) -> &[u64; 256] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }
}

impl std::ops::Index<usize> for Histogram {
    type Output = u64;

    fn index(&self, k: usize) -> &u64 {
        &self.bins[k]
    }
}

/// Outcome of the trigger test for the pair `(pair_index, pair_index + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChangeDecision {
    pub pair_index: usize,
    pub d_h: f64,
    pub triggered: bool,
}

pub fn gray_histogram(frame: &Frame) -> Histogram {
    histogram_of(frame.pixels())
}

pub fn histogram_of(values: &[u8]) -> Histogram {
    let mut bins = [0u64; 256];
    for &v in values {
        bins[v as usize] += 1;
    }
    Histogram { bins }
}

/// Sum of absolute bin differences normalized by the pixel count.
///
/// Both histograms must describe the same number of pixels.
pub fn histogram_distance(a: &Histogram, b: &Histogram, pixels: usize) -> f64 {
    let total: u64 = a
        .bins
        .iter()
        .zip(b.bins.iter())
        .map(|(&x, &y)| x.abs_diff(y))
        .sum();
    total as f64 / pixels as f64
}

/// Normalized histogram difference between two equally sized frames, in `[0, 2]`.
pub fn histogram_difference(a: &Frame, b: &Frame) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch {
            expected_w: a.width(),
            expected_h: a.height(),
            actual_w: b.width(),
            actual_h: b.height(),
        });
    }
    Ok(histogram_distance(
        &gray_histogram(a),
        &gray_histogram(b),
        a.width() * a.height(),
    ))
}

/// Strict comparison: a pair triggers only when `d_h > theta`.
#[inline]
pub fn detect_change(d_h: f64, theta: f64) -> bool {
    d_h > theta
}
