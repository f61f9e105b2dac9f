//! Fixed, seeded clip suites used by the acceptance tests and the benchmark.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::synth::{BackgroundSpec, BlobSpec, CaptionSpec, FlashSpec, SynthSpec};
use crate::error::{Error, Result};
use crate::frame_io::FrameSequence;
use crate::pipeline::{process_sequence, PipelineConfig};

pub const FRAME_WIDTH: usize = 352;
pub const FRAME_HEIGHT: usize = 288;

const WORDS: &[&str] = &[
    "NEWS", "LIVE", "GOAL", "SPORT", "WORLD", "TODAY", "REPORT", "MATCH", "SCORE", "PARIS", "TUNIS",
    "SFAX", "FINAL", "WEATHER", "MARKET", "2-1", "20:45", "CUP", "DERBY", "STORM",
];

/// Font sizes (cell height in pixels).
pub const FONT_SIZES: [usize; 3] = [16, 24, 32];

/// (background level, caption gray level) pairs spanning three contrasts.
pub const CONTRASTS: [(u8, u8); 3] = [(60, 230), (200, 30), (30, 250)];

/// Background texture strengths from plain to heavy noise.
pub const NOISE_LEVELS: [f64; 4] = [0.0, 10.0, 20.0, 30.0];

fn caption_text(rng: &mut ChaCha8Rng, max_chars: usize) -> String {
    // single tokens: a full-cell space splits monospaced words into separate regions
    loop {
        let word = *WORDS.choose(rng).expect("non-empty");
        if word.len() <= max_chars {
            return word.to_string();
        }
    }
}

fn place_caption(
    rng: &mut ChaCha8Rng,
    font_size: usize,
    color: u8,
    start: usize,
    end: usize,
    taken_rows: &[(usize, usize)],
) -> CaptionSpec {
    let max_chars = (FRAME_WIDTH - 4) / font_size;
    let text = caption_text(rng, max_chars);
    let width = text.len() * font_size;
    loop {
        let x = rng.gen_range(0..=FRAME_WIDTH - width);
        let y = rng.gen_range(0..=FRAME_HEIGHT - font_size);
        let clear = taken_rows
            .iter()
            .all(|&(y0, y1)| y + font_size + 8 <= y0 || y >= y1 + 8);
        if clear {
            return CaptionSpec {
                text: text.clone(),
                font_size,
                x,
                y,
                color,
                start,
                end,
            };
        }
    }
}

/// Twenty 352x288 clips of 100-200 frames with one to three captions each.
///
/// Captions are single tokens (a word, score or clock).
///
/// Sizes, contrasts and background noise levels rotate so every combination
/// class is represented.
pub fn detection_suite(seed: u64) -> Vec<SynthSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..20)
        .map(|i| {
            let count = rng.gen_range(100..=200);
            let (level, color) = CONTRASTS[i % CONTRASTS.len()];
            let noise = NOISE_LEVELS[i % NOISE_LEVELS.len()];
            let mut captions = Vec::new();
            let mut rows = Vec::new();
            let mut start = rng.gen_range(3..15);
            // a caption must outlive the 50-frame window that confirms it
            while start + 60 < count && captions.len() < 3 {
                let font_size = FONT_SIZES[(i + captions.len()) % FONT_SIZES.len()];
                let end = rng.gen_range(start + 55..count).min(count - 1);
                let c = place_caption(&mut rng, font_size, color, start, end, &rows);
                rows.push((c.y, c.y + font_size));
                captions.push(c);
                start += rng.gen_range(20..70);
            }
            SynthSpec {
                width: FRAME_WIDTH,
                height: FRAME_HEIGHT,
                count,
                frame_rate: 25.0,
                seed: seed.wrapping_mul(1000).wrapping_add(i as u64),
                background: BackgroundSpec {
                    level,
                    noise,
                    temporal_noise: 0.0,
                    source_image: None,
                },
                captions,
                blobs: Vec::new(),
                flashes: Vec::new(),
            }
        })
        .collect()
}

fn random_blob(rng: &mut ChaCha8Rng, count: usize, level: u8) -> BlobSpec {
    let color = if level < 128 { rng.gen_range(220..=255) } else { rng.gen_range(0..=30) };
    let speed = rng.gen_range(5.0..10.0);
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    BlobSpec {
        radius: rng.gen_range(8..=20),
        color,
        x: rng.gen_range(30.0..FRAME_WIDTH as f64 - 30.0),
        y: rng.gen_range(30.0..FRAME_HEIGHT as f64 - 30.0),
        dx: speed * angle.cos(),
        dy: speed * angle.sin(),
        start: rng.gen_range(0..20),
        end: count - 1,
    }
}

/// Ten caption-free clips: noise plus fast-moving high-contrast blobs, some
/// with a one-frame flash.
pub fn negative_suite(seed: u64) -> Vec<SynthSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..10)
        .map(|i| {
            let count = rng.gen_range(100..=200);
            let level = [40u8, 128, 210][i % 3];
            let blobs = (0..rng.gen_range(1..=3))
                .map(|_| random_blob(&mut rng, count, level))
                .collect();
            let flashes = if i % 3 == 1 {
                vec![FlashSpec {
                    frame: rng.gen_range(20..count - 20),
                    offset: 90,
                }]
            } else {
                Vec::new()
            };
            SynthSpec {
                width: FRAME_WIDTH,
                height: FRAME_HEIGHT,
                count,
                frame_rate: 25.0,
                seed: seed.wrapping_mul(1000).wrapping_add(500 + i as u64),
                background: BackgroundSpec {
                    level,
                    noise: NOISE_LEVELS[i % NOISE_LEVELS.len()],
                    temporal_noise: if i % 2 == 0 { 2.0 } else { 0.0 },
                    source_image: None,
                },
                captions: Vec::new(),
                blobs,
                flashes,
            }
        })
        .collect()
}

/// Long clip where every pair triggers (per-frame sensor noise) while blobs
/// move and captions come and go, so the full localization and temporal path
/// runs on each pair.
pub fn busy_clip(count: usize, seed: u64) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs = (0..3).map(|_| random_blob(&mut rng, count, 60)).map(|b| BlobSpec { start: 0, ..b }).collect();
    let mut captions = Vec::new();
    let mut start = 10;
    while start + 80 < count {
        let font_size = FONT_SIZES[captions.len() % FONT_SIZES.len()];
        captions.push(place_caption(&mut rng, font_size, 230, start, start + 70, &[]));
        start += 90;
    }
    SynthSpec {
        width: FRAME_WIDTH,
        height: FRAME_HEIGHT,
        count,
        frame_rate: 25.0,
        seed,
        background: BackgroundSpec {
            level: 60,
            noise: 20.0,
            temporal_noise: 2.0,
            source_image: None,
        },
        captions,
        blobs,
        flashes: Vec::new(),
    }
}

/// Long static clip: plain textured background, nothing ever changes.
pub fn static_clip(count: usize, seed: u64) -> SynthSpec {
    SynthSpec {
        width: FRAME_WIDTH,
        height: FRAME_HEIGHT,
        count,
        frame_rate: 25.0,
        seed,
        background: BackgroundSpec {
            level: 90,
            noise: 15.0,
            temporal_noise: 0.0,
            source_image: None,
        },
        captions: Vec::new(),
        blobs: Vec::new(),
        flashes: Vec::new(),
    }
}

/// Timing of one detection run on a single worker thread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Throughput {
    pub frames: usize,
    pub pairs_processed: usize,
    pub pairs_triggered: usize,
    pub elapsed_seconds: f64,
}

impl Throughput {
    pub fn pairs_per_second(&self) -> f64 {
        self.pairs_processed as f64 / self.elapsed_seconds
    }

    pub fn triggered_per_second(&self) -> f64 {
        self.pairs_triggered as f64 / self.elapsed_seconds
    }
}

/// Runs the pipeline over `seq` inside a one-thread pool.
pub fn measure_throughput(seq: &FrameSequence, cfg: &PipelineConfig) -> Result<Throughput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    let run = pool.install(|| process_sequence(seq, cfg))?;
    Ok(Throughput {
        frames: seq.count(),
        pairs_processed: run.pairs_processed,
        pairs_triggered: run.pairs_triggered,
        elapsed_seconds: run.elapsed,
    })
}
