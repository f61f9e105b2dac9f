//! Validation of candidate regions: geometry, contrast between the two
//! dominant gray-level modes, and persistence over a temporal window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::change_detect::histogram_of;
use crate::edgemap::EdgeSource;
use crate::error::{Error, Result};
use crate::frame_io::Frame;
use crate::quadtree::{localize, CandidateRegion, IntegralImage, QuadParams, Rect};

pub const DEFAULT_SIGMA: f64 = 110.0;
pub const DEFAULT_WINDOW: usize = 50;
pub const DEFAULT_SHIFT: usize = 2;

/// How a window frame is compared against the candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalMode {
    /// Re-run split and merge on (reference, frame j) and look for a matching region.
    Relocalize,
    /// Only re-measure the edge-difference density under the fixed bbox.
    FixedBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub sigma: f64,
    pub window: usize,
    pub shift: usize,
    pub min_area: usize,
    pub min_width: usize,
    pub min_height: usize,
    pub match_pos_tol: usize,
    pub match_density_tol: f64,
    pub temporal_mode: TemporalMode,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            sigma: DEFAULT_SIGMA,
            window: DEFAULT_WINDOW,
            shift: DEFAULT_SHIFT,
            min_area: 200,
            min_width: 16,
            min_height: 8,
            match_pos_tol: 4,
            match_density_tol: 0.1,
            temporal_mode: TemporalMode::Relocalize,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=255.0).contains(&self.sigma) {
            return Err(Error::config("sigma", format!("{} not in [0, 255]", self.sigma)));
        }
        if self.shift == 0 {
            return Err(Error::config("shift", "must be at least 1"));
        }
        if self.window == 0 {
            return Err(Error::config("window", "must be at least 1"));
        }
        if !self.window.is_multiple_of(self.shift) {
            return Err(Error::config(
                "shift",
                format!("window {} is not a multiple of shift {}", self.window, self.shift),
            ));
        }
        if self.match_density_tol.is_nan() || self.match_density_tol < 0.0 {
            return Err(Error::config("match_density_tol", "must be non-negative"));
        }
        Ok(())
    }
}

/// Region that survived every filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextRegion {
    pub bbox: Rect,
    pub first_frame: usize,
    pub persistence: usize,
    pub mean_density: f64,
}

/// Geometry gate: large enough, and at least as wide as tall.
pub fn size_filter(region: &CandidateRegion, cfg: &FilterConfig) -> bool {
    let r = region.extent;
    r.area() >= cfg.min_area && r.w >= cfg.min_width && r.h >= cfg.min_height && r.w >= r.h
}

/// Positions of the two tallest local maxima of the 5-bin smoothed histogram,
/// tallest first. `None` when fewer than two maxima exist.
pub fn dominant_peaks(hist: &[u64; 256]) -> Option<(usize, usize)> {
    // 5-bin moving sum; the common 1/5 factor does not move maxima
    let mut smooth = [0u64; 256];
    for (k, s) in smooth.iter_mut().enumerate() {
        let lo = k.saturating_sub(2);
        let hi = (k + 2).min(255);
        *s = hist[lo..=hi].iter().sum();
    }

    // plateau-aware local maxima; a plateau counts once, at its center
    let mut peaks: Vec<(u64, usize)> = Vec::new();
    let mut k = 0;
    while k < 256 {
        let v = smooth[k];
        let mut end = k;
        while end + 1 < 256 && smooth[end + 1] == v {
            end += 1;
        }
        let left_lower = k == 0 || smooth[k - 1] < v;
        let right_lower = end == 255 || smooth[end + 1] < v;
        if v > 0 && left_lower && right_lower {
            peaks.push((v, (k + end) / 2));
        }
        k = end + 1;
    }
    if peaks.len() < 2 {
        return None;
    }
    peaks.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    Some((peaks[0].1, peaks[1].1))
}

/// Keeps a crop whose two dominant gray-level peaks lie more than `sigma` apart.
pub fn contrast_filter(crop: &[u8], sigma: f64) -> bool {
    if crop.is_empty() {
        return false;
    }
    match dominant_peaks(histogram_of(crop).bins()) {
        Some((p1, p2)) => (p1.abs_diff(p2) as f64) > sigma,
        None => false,
    }
}

pub fn contrast_filter_frame(crop: &Frame, sigma: f64) -> bool {
    contrast_filter(crop.pixels(), sigma)
}

/// One sampled frame of the window, localized against the reference frame.
pub struct WindowCheck {
    pub frame_index: usize,
    pub regions: Vec<CandidateRegion>,
    difference: Option<IntegralImage>,
}

impl WindowCheck {
    fn matches(&self, region: &CandidateRegion, cfg: &FilterConfig) -> bool {
        match (&self.difference, cfg.temporal_mode) {
            (Some(ii), TemporalMode::FixedBox) => {
                let d = f64::from(ii.count(&region.bbox)) / region.bbox.area() as f64;
                (d - region.mean_density).abs() <= cfg.match_density_tol
            }
            _ => self
                .regions
                .iter()
                .any(|other| regions_match(region, other, cfg)),
        }
    }
}

/// Same position, size and density within the configured tolerances.
pub fn regions_match(a: &CandidateRegion, b: &CandidateRegion, cfg: &FilterConfig) -> bool {
    let tol = cfg.match_pos_tol;
    let (ra, rb) = (a.extent, b.extent);
    ra.x.abs_diff(rb.x) <= tol
        && ra.y.abs_diff(rb.y) <= tol
        && ra.w.abs_diff(rb.w) <= tol
        && ra.h.abs_diff(rb.h) <= tol
        && (a.mean_density - b.mean_density).abs() <= cfg.match_density_tol
}

/// Localizes `(reference, j)` for one sampled window frame.
pub fn window_check(
    edges: &dyn EdgeSource,
    reference: usize,
    j: usize,
    params: &QuadParams,
    cfg: &FilterConfig,
) -> Result<WindowCheck> {
    let prev = edges.binary_edges(reference)?;
    let next = edges.binary_edges(j)?;
    let loc = localize(&prev, &next, params, reference)?;
    let difference = (cfg.temporal_mode == TemporalMode::FixedBox).then(|| IntegralImage::new(&loc.difference));
    Ok(WindowCheck {
        frame_index: j,
        regions: loc.regions,
        difference,
    })
}

/// Verdict of the temporal filter for one candidate.
#[derive(Debug, Clone, PartialEq)]
pub enum TemporalOutcome {
    Confirmed(TextRegion),
    /// Persistence broken; carries the persistence accumulated before the miss.
    Rejected { persistence: usize },
    /// The window runs past the end of the sequence.
    Undecided,
}

/// Sampled frames `reference + K, reference + 2K, ..., reference + N`, or
/// `None` when the window does not fit in `count` frames.
pub fn window_frames(reference: usize, count: usize, cfg: &FilterConfig) -> Option<Vec<usize>> {
    if reference + cfg.window >= count {
        return None;
    }
    Some((1..=cfg.window / cfg.shift).map(|m| reference + m * cfg.shift).collect())
}

/// Runs the temporal check for several candidates that share one reference
/// frame. Window frames are localized once, in parallel batches, and the scan
/// stops as soon as every candidate has missed a check.
pub fn temporal_filter_batch(
    regions: &[CandidateRegion],
    edges: &dyn EdgeSource,
    reference: usize,
    params: &QuadParams,
    cfg: &FilterConfig,
) -> Result<Vec<TemporalOutcome>> {
    let Some(frames) = window_frames(reference, edges.count(), cfg) else {
        return Ok(vec![TemporalOutcome::Undecided; regions.len()]);
    };
    let mut persistence = vec![0usize; regions.len()];
    let mut alive = vec![true; regions.len()];
    let batch = rayon::current_num_threads().max(1);
    for chunk in frames.chunks(batch) {
        if !alive.iter().any(|&a| a) {
            break;
        }
        let checks: Vec<WindowCheck> = chunk
            .par_iter()
            .map(|&j| window_check(edges, reference, j, params, cfg))
            .collect::<Result<_>>()?;
        for check in &checks {
            for (i, region) in regions.iter().enumerate() {
                if !alive[i] {
                    continue;
                }
                if check.matches(region, cfg) {
                    persistence[i] += cfg.shift;
                } else {
                    alive[i] = false;
                }
            }
        }
    }
    Ok(regions
        .iter()
        .zip(persistence)
        .map(|(region, tp)| {
            if tp == cfg.window {
                TemporalOutcome::Confirmed(TextRegion {
                    bbox: region.extent,
                    first_frame: reference + 1,
                    persistence: tp,
                    mean_density: region.mean_density,
                })
            } else {
                TemporalOutcome::Rejected { persistence: tp }
            }
        })
        .collect())
}

/// Temporal check for a single candidate.
pub fn temporal_filter(
    region: &CandidateRegion,
    edges: &dyn EdgeSource,
    reference: usize,
    params: &QuadParams,
    cfg: &FilterConfig,
) -> Result<TemporalOutcome> {
    let mut out = temporal_filter_batch(std::slice::from_ref(region), edges, reference, params, cfg)?;
    Ok(out.pop().expect("one outcome per region"))
}
