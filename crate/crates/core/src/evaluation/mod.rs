//! Region-level scoring against ground truth, plus synthetic clip generation.
//!
//! The two ratios are named by their denominator. `ratio_over_detected` is
//! correct / detected (what most detection literature calls precision) and
//! `ratio_over_truth` is correct / ground truth (conventionally recall). The
//! report carries both labelings so numbers can be compared against sources
//! that use either convention.

pub mod corpus;
pub mod synth;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::pipeline::{DetectedRegion, RegionStatus, RunReport};
use crate::quadtree::Rect;

pub const DEFAULT_IOU: f64 = 0.5;
pub const DEFAULT_TEMPORAL_OVERLAP: usize = 1;

/// Annotated text instance with an inclusive frame span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRegion {
    pub id: String,
    pub bbox: Rect,
    pub frame_start: usize,
    pub frame_end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// A detection reduced to what matching needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bbox: Rect,
    pub frame_start: usize,
    pub frame_end: usize,
}

impl From<&DetectedRegion> for Detection {
    fn from(r: &DetectedRegion) -> Self {
        Detection {
            bbox: r.bbox,
            frame_start: r.first_frame,
            frame_end: r.first_frame + r.persistence.max(1) - 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMatch {
    pub detection: usize,
    pub truth_id: String,
    pub iou: f64,
}

fn span_overlap(a: (usize, usize), b: (usize, usize)) -> usize {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    if lo > hi {
        0
    } else {
        hi - lo + 1
    }
}

/// Greedy one-to-one matching by descending IoU.
///
/// A pair is eligible when IoU >= `iou_min` and the frame spans share at least
/// `temporal_overlap_min` frames.
pub fn match_regions(
    detected: &[Detection],
    truth: &[GroundTruthRegion],
    iou_min: f64,
    temporal_overlap_min: usize,
) -> Vec<RegionMatch> {
    let mut pairs = Vec::new();
    for (di, d) in detected.iter().enumerate() {
        for (ti, t) in truth.iter().enumerate() {
            let iou = d.bbox.iou(&t.bbox);
            let overlap = span_overlap((d.frame_start, d.frame_end), (t.frame_start, t.frame_end));
            if iou >= iou_min && overlap >= temporal_overlap_min {
                pairs.push((iou, di, ti));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut used_d = vec![false; detected.len()];
    let mut used_t = vec![false; truth.len()];
    let mut matches = Vec::new();
    for (iou, di, ti) in pairs {
        if used_d[di] || used_t[ti] {
            continue;
        }
        used_d[di] = true;
        used_t[ti] = true;
        matches.push(RegionMatch {
            detection: di,
            truth_id: truth[ti].id.clone(),
            iou,
        });
    }
    matches.sort_by_key(|m| m.detection);
    matches
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub detected: usize,
    pub correct: usize,
    pub ground_truth: usize,
}

/// The two ratios under one naming convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Labeled {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// correct / detected; `None` when nothing was detected.
    pub ratio_over_detected: Option<f64>,
    /// correct / ground truth; `None` when there is no ground truth.
    pub ratio_over_truth: Option<f64>,
    /// (detected - correct) / detected; `None` when nothing was detected.
    pub false_alarm: Option<f64>,
    /// Names of the ratios that are undefined for this run.
    pub undefined: Vec<String>,
    /// Recall = correct / detected, precision = correct / ground truth.
    pub paper_labels: Labeled,
    /// Precision = correct / detected, recall = correct / ground truth.
    pub conventional_labels: Labeled,
    pub counts: Counts,
    pub matches: Vec<RegionMatch>,
}

pub fn compute_metrics(matches: Vec<RegionMatch>, detected: usize, ground_truth: usize) -> EvalReport {
    let correct = matches.len();
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let over_detected = ratio(correct, detected);
    let over_truth = ratio(correct, ground_truth);
    let false_alarm = ratio(detected.saturating_sub(correct), detected);
    let mut undefined = Vec::new();
    if detected == 0 {
        undefined.push("ratio_over_detected".to_string());
        undefined.push("false_alarm".to_string());
    }
    if ground_truth == 0 {
        undefined.push("ratio_over_truth".to_string());
    }
    EvalReport {
        ratio_over_detected: over_detected,
        ratio_over_truth: over_truth,
        false_alarm,
        undefined,
        paper_labels: Labeled {
            precision: over_truth,
            recall: over_detected,
        },
        conventional_labels: Labeled {
            precision: over_detected,
            recall: over_truth,
        },
        counts: Counts {
            detected,
            correct,
            ground_truth,
        },
        matches,
    }
}

/// Scores the confirmed regions of a detection run.
pub fn evaluate_regions(
    regions: &[DetectedRegion],
    truth: &[GroundTruthRegion],
    iou_min: f64,
    temporal_overlap_min: usize,
) -> EvalReport {
    let detected: Vec<Detection> = regions
        .iter()
        .filter(|r| r.status == RegionStatus::Confirmed)
        .map(Detection::from)
        .collect();
    let matches = match_regions(&detected, truth, iou_min, temporal_overlap_min);
    compute_metrics(matches, detected.len(), truth.len())
}

pub fn evaluate_report(report: &RunReport, truth: &[GroundTruthRegion], iou_min: f64) -> EvalReport {
    evaluate_regions(&report.regions, truth, iou_min, DEFAULT_TEMPORAL_OVERLAP)
}

/// Folds several per-clip reports into corpus totals.
pub fn aggregate(reports: &[EvalReport]) -> EvalReport {
    let mut matches = Vec::new();
    let (mut detected, mut truth) = (0, 0);
    for r in reports {
        matches.extend(r.matches.iter().cloned());
        detected += r.counts.detected;
        truth += r.counts.ground_truth;
    }
    compute_metrics(matches, detected, truth)
}
