//! Frame loading and grayscale conversion.
//!
//! A [`FrameSequence`] is either fully in memory (synthetic clips, tests) or
//! backed by a list of numbered image files that are decoded on demand. Both
//! variants are read-only and can be shared between worker threads.

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use image::{DynamicImage, GrayImage, RgbImage};
use serde::Deserialize;

use crate::error::{Error, Result};

/// Nominal PAL frame rate.
pub const DEFAULT_FRAME_RATE: f64 = 25.0;

const DECODE_CACHE_FRAMES: usize = 128;

/// One grayscale frame, row-major, 8 bits per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub index: usize,
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(index: usize, width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFrame(format!(
                "frame {index} has zero extent ({width}x{height})"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidFrame(format!(
                "frame {index}: {} pixels for {width}x{height}",
                pixels.len()
            )));
        }
        Ok(Frame {
            index,
            width,
            height,
            pixels,
        })
    }

    /// Frame filled with a single gray level.
    pub fn filled(index: usize, width: usize, height: usize, level: u8) -> Self {
        assert!(width > 0 && height > 0, "frame extent must be positive");
        Frame {
            index,
            width,
            height,
            pixels: vec![level; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage::from_raw(self.width as u32, self.height as u32, self.pixels.clone())
            .expect("pixel buffer matches dimensions")
    }

    pub fn from_gray_image(index: usize, img: &GrayImage) -> Self {
        Frame {
            index,
            width: img.width() as usize,
            height: img.height() as usize,
            pixels: img.as_raw().clone(),
        }
    }
}

/// BT.601 luma of one RGB pixel, rounded and clamped to 8 bits.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

/// Converts an 8-bit RGB image to a grayscale [`Frame`].
pub fn to_grayscale(rgb: &RgbImage, index: usize) -> Frame {
    let pixels = rgb.pixels().map(|p| luma(p[0], p[1], p[2])).collect();
    Frame {
        index,
        width: rgb.width() as usize,
        height: rgb.height() as usize,
        pixels,
    }
}

pub(crate) fn decode_frame(path: &Path, index: usize) -> Result<Frame> {
    let img = image::open(path).map_err(|e| Error::DecodeError {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let frame = match img {
        DynamicImage::ImageLuma8(gray) => Frame::from_gray_image(index, &gray),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => {
            Frame::from_gray_image(index, &img.to_luma8())
        }
        other => to_grayscale(&other.to_rgb8(), index),
    };
    if frame.width == 0 || frame.height == 0 {
        return Err(Error::DecodeError {
            path: path.to_path_buf(),
            reason: "empty image".into(),
        });
    }
    Ok(frame)
}

enum Source {
    Memory(Vec<Arc<Frame>>),
    Files {
        paths: Vec<PathBuf>,
        cache: Mutex<DecodeCache>,
    },
}

#[derive(Default)]
struct DecodeCache {
    frames: HashMap<usize, Arc<Frame>>,
    order: VecDeque<usize>,
}

impl DecodeCache {
    fn insert(&mut self, index: usize, frame: Arc<Frame>) {
        if self.frames.insert(index, frame).is_none() {
            self.order.push_back(index);
        }
        while self.order.len() > DECODE_CACHE_FRAMES {
            if let Some(old) = self.order.pop_front() {
                self.frames.remove(&old);
            }
        }
    }
}

/// An ordered, randomly accessible run of equally sized frames.
pub struct FrameSequence {
    source: Source,
    width: usize,
    height: usize,
    pub frame_rate: f64,
}

impl std::fmt::Debug for FrameSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FrameSequence")
            .field("count", &self.count())
            .field("width", &self.width)
            .field("height", &self.height)
            .field("frame_rate", &self.frame_rate)
            .finish()
    }
}

impl FrameSequence {
    /// Builds an in-memory sequence. Frames are re-indexed `0..count`.
    pub fn from_frames(frames: Vec<Frame>, frame_rate: f64) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::NoFrames("empty frame list".into()))?;
        let (width, height) = (first.width, first.height);
        let mut out = Vec::with_capacity(frames.len());
        for (i, f) in frames.into_iter().enumerate() {
            if f.width != width || f.height != height {
                return Err(Error::DimensionMismatch {
                    expected_w: width,
                    expected_h: height,
                    actual_w: f.width,
                    actual_h: f.height,
                });
            }
            out.push(Arc::new(f.with_index(i)));
        }
        Ok(FrameSequence {
            source: Source::Memory(out),
            width,
            height,
            frame_rate,
        })
    }

    pub fn count(&self) -> usize {
        match &self.source {
            Source::Memory(frames) => frames.len(),
            Source::Files { paths, .. } => paths.len(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Returns frame `index`, decoding it from disk if needed.
    pub fn frame(&self, index: usize) -> Result<Arc<Frame>> {
        let count = self.count();
        if index >= count {
            return Err(Error::FrameIndexOutOfRange { index, count });
        }
        match &self.source {
            Source::Memory(frames) => Ok(Arc::clone(&frames[index])),
            Source::Files { paths, cache } => {
                if let Some(f) = cache.lock().expect("decode cache poisoned").frames.get(&index) {
                    return Ok(Arc::clone(f));
                }
                let frame = Arc::new(decode_frame(&paths[index], index)?);
                if frame.width != self.width || frame.height != self.height {
                    return Err(Error::DimensionMismatch {
                        expected_w: self.width,
                        expected_h: self.height,
                        actual_w: frame.width,
                        actual_h: frame.height,
                    });
                }
                cache
                    .lock()
                    .expect("decode cache poisoned")
                    .insert(index, Arc::clone(&frame));
                Ok(frame)
            }
        }
    }

    /// Iterates frames in index order.
    pub fn iter(&self) -> impl Iterator<Item = Result<Arc<Frame>>> + '_ {
        (0..self.count()).map(move |i| self.frame(i))
    }

    /// Source file paths, when the sequence is disk-backed.
    pub fn paths(&self) -> Option<&[PathBuf]> {
        match &self.source {
            Source::Files { paths, .. } => Some(paths),
            Source::Memory(_) => None,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Manifest {
    List(Vec<PathBuf>),
    Object {
        frames: Vec<PathBuf>,
        #[serde(default)]
        frame_rate: Option<f64>,
    },
}

/// First run of ASCII digits in the file name.
fn first_number(path: &Path) -> Option<u64> {
    let name = path.file_name()?.to_str()?;
    let digits: String = name
        .chars()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect();
    digits.parse().ok()
}

fn is_frame_file(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref(),
        Some("png" | "pgm")
    )
}

fn sort_numeric(paths: &mut [PathBuf]) {
    paths.sort_by(|a, b| {
        first_number(a)
            .cmp(&first_number(b))
            .then_with(|| a.file_name().cmp(&b.file_name()))
    });
}

/// Opens a directory of numbered PNG/PGM frames, a glob pattern, or a JSON
/// manifest listing frame paths relative to the manifest.
pub fn open_sequence(pattern: impl AsRef<Path>) -> Result<FrameSequence> {
    let pattern = pattern.as_ref();
    let mut frame_rate = DEFAULT_FRAME_RATE;
    let paths: Vec<PathBuf> = if pattern.is_dir() {
        let entries = fs::read_dir(pattern).map_err(|e| Error::io(pattern, e))?;
        let mut paths = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(pattern, e))?.path();
            if path.is_file() && is_frame_file(&path) {
                paths.push(path);
            }
        }
        sort_numeric(&mut paths);
        paths
    } else if pattern.extension().and_then(|e| e.to_str()) == Some("json") && pattern.is_file() {
        let text = fs::read_to_string(pattern).map_err(|e| Error::io(pattern, e))?;
        let base = pattern.parent().unwrap_or_else(|| Path::new("."));
        let listed = match serde_json::from_str::<Manifest>(&text)? {
            Manifest::List(frames) => frames,
            Manifest::Object { frames, frame_rate: fr } => {
                if let Some(fr) = fr {
                    frame_rate = fr;
                }
                frames
            }
        };
        listed.into_iter().map(|p| base.join(p)).collect()
    } else {
        let pat = pattern.to_string_lossy();
        let matches = glob::glob(&pat).map_err(|e| Error::NoFrames(format!("{pat}: {e}")))?;
        let mut paths: Vec<PathBuf> = matches
            .filter_map(|m| m.ok())
            .filter(|p| p.is_file() && is_frame_file(p))
            .collect();
        sort_numeric(&mut paths);
        paths
    };

    if paths.len() < 2 {
        return Err(Error::NoFrames(format!(
            "{} matched {} frame file(s), need at least 2",
            pattern.display(),
            paths.len()
        )));
    }

    let mut dims = None;
    for path in &paths {
        let (w, h) = image::image_dimensions(path).map_err(|e| Error::DecodeError {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        let (w, h) = (w as usize, h as usize);
        match dims {
            None => dims = Some((w, h)),
            Some((ew, eh)) if (ew, eh) != (w, h) => {
                return Err(Error::DimensionMismatch {
                    expected_w: ew,
                    expected_h: eh,
                    actual_w: w,
                    actual_h: h,
                })
            }
            _ => {}
        }
    }
    let (width, height) = dims.expect("at least two paths");
    if width == 0 || height == 0 {
        return Err(Error::DecodeError {
            path: paths[0].clone(),
            reason: "empty image".into(),
        });
    }

    Ok(FrameSequence {
        source: Source::Files {
            paths,
            cache: Mutex::new(DecodeCache::default()),
        },
        width,
        height,
        frame_rate,
    })
}

/// Writes a frame as an 8-bit grayscale PNG.
pub fn write_png(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    frame.to_image().save(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(other.to_string())),
    })
}

/// Writes a binary (P5) PGM.
pub fn write_pgm(width: usize, height: usize, pixels: &[u8], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = format!("P5\n{width} {height}\n255\n").into_bytes();
    buf.extend_from_slice(pixels);
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}
