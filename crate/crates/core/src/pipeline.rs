//! End-to-end detection over a frame sequence and the run report format.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use image::{Rgb, RgbImage};
use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::change_detect::{detect_change, gray_histogram, histogram_distance, DEFAULT_THETA};
use crate::edgemap::{binarize_optimal, sobel_edge_map, EdgeCache, EdgeSource};
use crate::error::{Error, Result};
use crate::filtering::{
    contrast_filter_frame, size_filter, temporal_filter_batch, FilterConfig, TemporalOutcome,
};
use crate::frame_io::{write_pgm, FrameSequence};
use crate::quadtree::{localize, map_to_frame, render_tree, QuadParams, Rect};

/// IoU above which two temporally overlapping confirmations are one caption.
pub const DEFAULT_DEDUP_IOU: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub theta: f64,
    #[serde(flatten)]
    pub quad: QuadParams,
    #[serde(flatten)]
    pub filter: FilterConfig,
    pub dedup_iou: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            theta: DEFAULT_THETA,
            quad: QuadParams::default(),
            filter: FilterConfig::default(),
            dedup_iou: DEFAULT_DEDUP_IOU,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |key: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(key, format!("{v} not in [0, 1]")))
            }
        };
        if !(0.0..=2.0).contains(&self.theta) {
            return Err(Error::config("theta", format!("{} not in [0, 2]", self.theta)));
        }
        unit("split_threshold", self.quad.split_threshold)?;
        unit("density_floor", self.quad.density_floor)?;
        unit("dedup_iou", self.dedup_iou)?;
        if self.quad.density_tol.is_nan() || self.quad.density_tol < 0.0 {
            return Err(Error::config("density_tol", "must be non-negative"));
        }
        if self.quad.min_block == 0 {
            return Err(Error::config("min_block", "must be at least 1"));
        }
        self.filter.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionStatus {
    Confirmed,
    RejectedSize,
    RejectedContrast,
    RejectedTemporal,
    Undecided,
}

/// One candidate and what the filters made of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedRegion {
    pub bbox: Rect,
    pub first_frame: usize,
    pub persistence: usize,
    pub status: RegionStatus,
    pub mean_density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRun {
    pub regions: Vec<DetectedRegion>,
    pub pairs_processed: usize,
    pub pairs_triggered: usize,
    pub elapsed: f64,
}

impl DetectionRun {
    pub fn confirmed(&self) -> impl Iterator<Item = &DetectedRegion> {
        self.regions
            .iter()
            .filter(|r| r.status == RegionStatus::Confirmed)
    }
}

/// Optional debug output directories.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub dump_edges: Option<PathBuf>,
    pub dump_quadtree: Option<PathBuf>,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn process_sequence(seq: &FrameSequence, cfg: &PipelineConfig) -> Result<DetectionRun> {
    process_sequence_with(seq, cfg, &RunOptions::default())
}

pub fn process_sequence_with(
    seq: &FrameSequence,
    cfg: &PipelineConfig,
    opts: &RunOptions,
) -> Result<DetectionRun> {
    cfg.validate()?;
    let count = seq.count();
    if count < 2 {
        return Err(Error::NoFrames(format!("sequence has {count} frame(s)")));
    }
    for dir in [&opts.dump_edges, &opts.dump_quadtree].into_iter().flatten() {
        ensure_dir(dir)?;
    }

    let start = Instant::now();
    let pixels = seq.width() * seq.height();
    let edges = EdgeCache::new(seq);
    let mut regions = Vec::new();
    let mut confirmed: Vec<DetectedRegion> = Vec::new();
    let mut pairs_triggered = 0;

    let mut hist_prev = gray_histogram(&*seq.frame(0)?);
    for i in 0..count - 1 {
        let next = seq.frame(i + 1)?;
        let hist_next = gray_histogram(&next);
        let d_h = histogram_distance(&hist_prev, &hist_next, pixels);
        hist_prev = hist_next;
        if !detect_change(d_h, cfg.theta) {
            continue;
        }
        pairs_triggered += 1;
        edges.evict_before(i);

        let (prev_bits, next_bits) = rayon::join(|| edges.binary_edges(i), || edges.binary_edges(i + 1));
        let loc = localize(&*prev_bits?, &*next_bits?, &cfg.quad, i)?;
        debug!("pair {i}: d_h={d_h:.4}, {} candidate(s)", loc.regions.len());

        if let Some(dir) = &opts.dump_edges {
            let edge = sobel_edge_map(&next)?;
            let (binary, _) = binarize_optimal(&edge);
            write_pgm(edge.width, edge.height, &edge.quantized(), dir.join(format!("pair_{i:06}_edge.pgm")))?;
            write_pgm(binary.width, binary.height, &binary.to_gray(), dir.join(format!("pair_{i:06}_binary.pgm")))?;
            let diff = &loc.difference;
            write_pgm(diff.width, diff.height, &diff.to_gray(), dir.join(format!("pair_{i:06}_diff.pgm")))?;
        }
        if let Some(dir) = &opts.dump_quadtree {
            let (w, h) = (loc.tree.rect.w, loc.tree.rect.h);
            write_pgm(w, h, &render_tree(&loc.tree), dir.join(format!("pair_{i:06}_quadtree.pgm")))?;
        }

        let rejected = |region: &crate::quadtree::CandidateRegion, status| DetectedRegion {
            bbox: region.extent,
            first_frame: i + 1,
            persistence: 0,
            status,
            mean_density: region.mean_density,
        };
        let mut survivors = Vec::new();
        for region in &loc.regions {
            if !size_filter(region, &cfg.filter) {
                regions.push(rejected(region, RegionStatus::RejectedSize));
                continue;
            }
            let mapped = map_to_frame(region, &next)?;
            if !contrast_filter_frame(&mapped.crop, cfg.filter.sigma) {
                regions.push(rejected(region, RegionStatus::RejectedContrast));
                continue;
            }
            survivors.push(mapped.region);
        }
        if survivors.is_empty() {
            continue;
        }

        let outcomes = temporal_filter_batch(&survivors, &edges, i, &cfg.quad, &cfg.filter)?;
        for (region, outcome) in survivors.iter().zip(outcomes) {
            let entry = match outcome {
                TemporalOutcome::Confirmed(text) => {
                    let window_end = text.first_frame + text.persistence;
                    let duplicate = confirmed.iter().any(|c| {
                        c.bbox.iou(&text.bbox) >= cfg.dedup_iou
                            && c.first_frame <= window_end
                            && text.first_frame <= c.first_frame + c.persistence
                    });
                    if duplicate {
                        debug!("pair {i}: duplicate confirmation at {:?}", text.bbox);
                        continue;
                    }
                    let entry = DetectedRegion {
                        bbox: text.bbox,
                        first_frame: text.first_frame,
                        persistence: text.persistence,
                        status: RegionStatus::Confirmed,
                        mean_density: text.mean_density,
                    };
                    confirmed.push(entry.clone());
                    entry
                }
                TemporalOutcome::Rejected { persistence } => DetectedRegion {
                    persistence,
                    ..rejected(region, RegionStatus::RejectedTemporal)
                },
                TemporalOutcome::Undecided => rejected(region, RegionStatus::Undecided),
            };
            regions.push(entry);
        }
    }

    let run = DetectionRun {
        regions,
        pairs_processed: count - 1,
        pairs_triggered,
        elapsed: start.elapsed().as_secs_f64(),
    };
    info!(
        "{} pair(s), {} triggered, {} confirmed region(s) in {:.2}s",
        run.pairs_processed,
        run.pairs_triggered,
        run.confirmed().count(),
        run.elapsed
    );
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub pairs_processed: usize,
    pub pairs_triggered: usize,
    pub elapsed_seconds: f64,
}

/// JSON document written by `detect`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub source: String,
    pub config: PipelineConfig,
    pub regions: Vec<DetectedRegion>,
    pub stats: RunStats,
}

impl RunReport {
    pub fn new(source: impl Into<String>, config: &PipelineConfig, run: &DetectionRun) -> Self {
        RunReport {
            source: source.into(),
            config: config.clone(),
            regions: run.regions.clone(),
            stats: RunStats {
                pairs_processed: run.pairs_processed,
                pairs_triggered: run.pairs_triggered,
                elapsed_seconds: run.elapsed,
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn confirmed(&self) -> impl Iterator<Item = &DetectedRegion> {
        self.regions
            .iter()
            .filter(|r| r.status == RegionStatus::Confirmed)
    }
}

fn draw_rect(img: &mut RgbImage, r: &Rect, color: Rgb<u8>) {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let x1 = (r.right() - 1).min(w - 1);
    let y1 = (r.bottom() - 1).min(h - 1);
    for x in r.x.min(w - 1)..=x1 {
        img.put_pixel(x as u32, r.y.min(h - 1) as u32, color);
        img.put_pixel(x as u32, y1 as u32, color);
    }
    for y in r.y.min(h - 1)..=y1 {
        img.put_pixel(r.x.min(w - 1) as u32, y as u32, color);
        img.put_pixel(x1 as u32, y as u32, color);
    }
}

/// Writes one PNG per frame that has confirmed regions, with every box drawn.
/// Returns the number of images written.
pub fn render_overlays(run: &DetectionRun, seq: &FrameSequence, out_dir: &Path) -> Result<usize> {
    ensure_dir(out_dir)?;
    let mut by_frame: BTreeMap<usize, Vec<(usize, Rect)>> = BTreeMap::new();
    for (ordinal, region) in run.confirmed().enumerate() {
        by_frame
            .entry(region.first_frame)
            .or_default()
            .push((ordinal, region.bbox));
    }
    for (&index, boxes) in &by_frame {
        let frame = seq.frame(index)?;
        let mut img = RgbImage::from_fn(frame.width() as u32, frame.height() as u32, |x, y| {
            let v = frame.get(x as usize, y as usize);
            Rgb([v, v, v])
        });
        for (_, bbox) in boxes {
            draw_rect(&mut img, bbox, Rgb([255, 0, 0]));
        }
        let ordinals: Vec<String> = boxes.iter().map(|(o, _)| o.to_string()).collect();
        let path = out_dir.join(format!("frame_{index:06}_regions_{}.png", ordinals.join("-")));
        img.save(&path).map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(&path, io),
            other => Error::io(&path, std::io::Error::other(other.to_string())),
        })?;
    }
    Ok(by_frame.len())
}
