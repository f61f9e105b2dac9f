//! Seeded synthetic clips: bitmap-font captions over plain or noisy
//! backgrounds, with optional moving blobs and luminance flashes.

use std::fs;
use std::path::{Path, PathBuf};

use font8x8::legacy::BASIC_LEGACY;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::GroundTruthRegion;
use crate::error::{Error, Result};
use crate::frame_io::{decode_frame, write_png, Frame, FrameSequence, DEFAULT_FRAME_RATE};
use crate::quadtree::Rect;

/// Glyph cell edge of the embedded font, in pixels.
pub const GLYPH_CELL: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundSpec {
    /// Mean gray level.
    pub level: u8,
    /// Standard deviation of the static per-pixel texture.
    pub noise: f64,
    /// Standard deviation of fresh per-frame sensor noise.
    pub temporal_noise: f64,
    /// Grayscale image tiled across the frame instead of a flat level.
    pub source_image: Option<PathBuf>,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        BackgroundSpec {
            level: 40,
            noise: 0.0,
            temporal_noise: 0.0,
            source_image: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionSpec {
    pub text: String,
    /// Glyph cell height in pixels; rounded to a multiple of 8.
    pub font_size: usize,
    pub x: usize,
    pub y: usize,
    /// Gray level of the glyph strokes.
    pub color: u8,
    /// First and last frame (inclusive) on which the caption is drawn.
    pub start: usize,
    pub end: usize,
}

impl CaptionSpec {
    pub fn scale(&self) -> usize {
        ((self.font_size as f64 / GLYPH_CELL as f64).round() as usize).max(1)
    }

    /// Extent of the full glyph cells.
    pub fn cell_box(&self) -> Rect {
        let s = self.scale();
        Rect::new(
            self.x,
            self.y,
            self.text.chars().count() * GLYPH_CELL * s,
            GLYPH_CELL * s,
        )
    }
}

/// Filled disk that moves `(dx, dy)` pixels per frame, bouncing off the borders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub radius: usize,
    pub color: u8,
    pub x: f64,
    pub y: f64,
    pub dx: f64,
    pub dy: f64,
    pub start: usize,
    pub end: usize,
}

/// Adds `offset` to every pixel of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlashSpec {
    pub frame: usize,
    pub offset: i16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub count: usize,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub background: BackgroundSpec,
    #[serde(default)]
    pub captions: Vec<CaptionSpec>,
    #[serde(default)]
    pub blobs: Vec<BlobSpec>,
    #[serde(default)]
    pub flashes: Vec<FlashSpec>,
}

fn default_frame_rate() -> f64 {
    DEFAULT_FRAME_RATE
}

fn glyph(c: char) -> [u8; 8] {
    let code = c as usize;
    if code < 128 {
        BASIC_LEGACY[code]
    } else {
        BASIC_LEGACY['?' as usize]
    }
}

/// Pixels covered by the caption's strokes, relative to the frame.
fn caption_ink(caption: &CaptionSpec) -> Vec<(usize, usize)> {
    let s = caption.scale();
    let mut ink = Vec::new();
    for (ci, c) in caption.text.chars().enumerate() {
        let rows = glyph(c);
        let ox = caption.x + ci * GLYPH_CELL * s;
        for (gy, row) in rows.iter().enumerate() {
            for gx in 0..GLYPH_CELL {
                if row & (1 << gx) == 0 {
                    continue;
                }
                for sy in 0..s {
                    for sx in 0..s {
                        ink.push((ox + gx * s + sx, caption.y + gy * s + sy));
                    }
                }
            }
        }
    }
    ink
}

fn ink_bounds(ink: &[(usize, usize)]) -> Option<Rect> {
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for &(x, y) in ink {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    (x0 != usize::MAX).then(|| Rect::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1))
}

fn bounce(pos: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let span = hi - lo;
    let t = (pos - lo).rem_euclid(2.0 * span);
    lo + if t > span { 2.0 * span - t } else { t }
}

fn background_frame(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let (w, h) = (spec.width, spec.height);
    let bg = &spec.background;
    let mut base: Vec<f64> = match &bg.source_image {
        Some(path) => {
            let img = decode_frame(path, 0)?;
            (0..w * h)
                .map(|i| f64::from(img.get((i % w) % img.width(), (i / w) % img.height())))
                .collect()
        }
        None => vec![f64::from(bg.level); w * h],
    };
    if bg.noise > 0.0 {
        let normal = Normal::new(0.0, bg.noise).map_err(|e| Error::config("background.noise", e.to_string()))?;
        for v in &mut base {
            *v += normal.sample(rng);
        }
    }
    Ok(base)
}

fn validate(spec: &SynthSpec) -> Result<Vec<Rect>> {
    if spec.width < 3 || spec.height < 3 {
        return Err(Error::FrameTooSmall {
            width: spec.width,
            height: spec.height,
        });
    }
    if spec.count < 2 {
        return Err(Error::NoFrames(format!("synthetic clip of {} frame(s)", spec.count)));
    }
    let mut bounds = Vec::new();
    for (i, c) in spec.captions.iter().enumerate() {
        if !c.cell_box().fits_in(spec.width, spec.height) {
            return Err(Error::CaptionOutOfBounds(format!(
                "caption {i} ({:?}) cell box {:?} exceeds {}x{}",
                c.text,
                c.cell_box(),
                spec.width,
                spec.height
            )));
        }
        if c.start > c.end || c.end >= spec.count {
            return Err(Error::CaptionOutOfBounds(format!(
                "caption {i} span {}..={} outside 0..{}",
                c.start, c.end, spec.count
            )));
        }
        let b = ink_bounds(&caption_ink(c))
            .ok_or_else(|| Error::config(format!("captions[{i}].text"), "no visible glyphs"))?;
        bounds.push(b);
    }
    Ok(bounds)
}

/// Renders the clip and returns it with one ground-truth region per caption.
pub fn generate_synthetic_clip(spec: &SynthSpec) -> Result<(FrameSequence, Vec<GroundTruthRegion>)> {
    let bounds = validate(spec)?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let base = background_frame(spec, &mut rng)?;
    let sensor = if spec.background.temporal_noise > 0.0 {
        Some(
            Normal::new(0.0, spec.background.temporal_noise)
                .map_err(|e| Error::config("background.temporal_noise", e.to_string()))?,
        )
    } else {
        None
    };
    let inks: Vec<Vec<(usize, usize)>> = spec.captions.iter().map(caption_ink).collect();

    let mut frames = Vec::with_capacity(spec.count);
    for t in 0..spec.count {
        let mut px: Vec<f64> = base.clone();
        if let Some(n) = &sensor {
            for v in &mut px {
                *v += n.sample(&mut rng);
            }
        }
        for blob in spec.blobs.iter().filter(|b| (b.start..=b.end).contains(&t)) {
            let dt = (t - blob.start) as f64;
            let r = blob.radius as f64;
            let cx = bounce(blob.x + blob.dx * dt, r, w as f64 - 1.0 - r);
            let cy = bounce(blob.y + blob.dy * dt, r, h as f64 - 1.0 - r);
            let (x0, x1) = ((cx - r).floor().max(0.0) as usize, ((cx + r).ceil() as usize).min(w - 1));
            let (y0, y1) = ((cy - r).floor().max(0.0) as usize, ((cy + r).ceil() as usize).min(h - 1));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let (ddx, ddy) = (x as f64 - cx, y as f64 - cy);
                    if ddx * ddx + ddy * ddy <= r * r {
                        px[y * w + x] = f64::from(blob.color);
                    }
                }
            }
        }
        for (caption, ink) in spec.captions.iter().zip(&inks) {
            if (caption.start..=caption.end).contains(&t) {
                for &(x, y) in ink {
                    px[y * w + x] = f64::from(caption.color);
                }
            }
        }
        let offset: f64 = spec
            .flashes
            .iter()
            .filter(|f| f.frame == t)
            .map(|f| f64::from(f.offset))
            .sum();
        let pixels = px
            .into_iter()
            .map(|v| (v + offset).round().clamp(0.0, 255.0) as u8)
            .collect();
        frames.push(Frame::new(t, w, h, pixels)?);
    }

    let truth = spec
        .captions
        .iter()
        .zip(bounds)
        .enumerate()
        .map(|(i, (c, bbox))| GroundTruthRegion {
            id: format!("caption-{i}"),
            bbox,
            frame_start: c.start,
            frame_end: c.end,
            text: Some(c.text.clone()),
        })
        .collect();
    Ok((FrameSequence::from_frames(frames, spec.frame_rate)?, truth))
}

/// Writes `frame_NNNN.png` files and `gt.json` into `dir`.
pub fn write_clip(seq: &FrameSequence, truth: &[GroundTruthRegion], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for frame in seq.iter() {
        let frame = frame?;
        write_png(&frame, dir.join(format!("frame_{:04}.png", frame.index)))?;
    }
    let gt = dir.join("gt.json");
    fs::write(&gt, serde_json::to_string_pretty(truth)?).map_err(|e| Error::io(&gt, e))
}
