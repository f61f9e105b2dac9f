//! Scores the default configuration on the synthetic suites.
//!
//! `cargo run --release --example calibrate -- [key=value ...]`
//!
//! `CALIBRATE_SEED` picks another corpus; `CALIBRATE_CLIP=n` dumps one clip.

use vidtext::cli::apply_config_map;
use vidtext::evaluation::corpus::{detection_suite, negative_suite};
use vidtext::evaluation::synth::generate_synthetic_clip;
use vidtext::evaluation::{aggregate, evaluate_regions};
use vidtext::pipeline::{process_sequence, PipelineConfig};

fn main() -> vidtext::Result<()> {
    let mut cfg = PipelineConfig::default();
    let mut map = serde_json::Map::new();
    for arg in std::env::args().skip(1) {
        let (k, v) = arg.split_once('=').expect("key=value");
        let value = serde_json::from_str(v).unwrap_or(serde_json::Value::String(v.into()));
        map.insert(k.to_string(), value);
    }
    apply_config_map(&mut cfg, &map)?;

    // CALIBRATE_CLIP=n prints every candidate of one positive clip
    let only: Option<usize> = std::env::var("CALIBRATE_CLIP").ok().and_then(|v| v.parse().ok());
    let seed: u64 = std::env::var("CALIBRATE_SEED").ok().and_then(|v| v.parse().ok()).unwrap_or(2024);
    let mut reports = Vec::new();
    for (i, spec) in detection_suite(seed).iter().enumerate() {
        if only.is_some_and(|n| n != i) {
            continue;
        }
        let (seq, truth) = generate_synthetic_clip(spec)?;
        let run = process_sequence(&seq, &cfg)?;
        let report = evaluate_regions(&run.regions, &truth, 0.5, 1);
        println!(
            "clip {i:2}: noise {:>4} truth {} confirmed {} correct {} triggered {}/{} ({:.2}s)",
            spec.background.noise,
            truth.len(),
            report.counts.detected,
            report.counts.correct,
            run.pairs_triggered,
            run.pairs_processed,
            run.elapsed
        );
        for t in &truth {
            let best = run
                .confirmed()
                .map(|r| (r.bbox.iou(&t.bbox), r.bbox))
                .max_by(|a, b| a.0.total_cmp(&b.0));
            println!("    truth {:?} {:?} best {:?}", t.text, t.bbox, best);
        }
        for r in run.confirmed() {
            println!("    confirmed {:?} @{}", r.bbox, r.first_frame);
        }
        if only.is_some() {
            for c in &spec.captions {
                println!("    caption {:?} frames {}..={}", c.text, c.start, c.end);
            }
            for r in &run.regions {
                println!("    {:?} {:?} @{} p={}", r.status, r.bbox, r.first_frame, r.persistence);
            }
        }
        reports.push(report);
    }
    let total = aggregate(&reports);
    println!(
        "positive: over_truth {:?} over_detected {:?}",
        total.ratio_over_truth, total.ratio_over_detected
    );

    let mut false_hits = 0;
    for (i, spec) in negative_suite(seed).iter().enumerate() {
        let (seq, _) = generate_synthetic_clip(spec)?;
        let run = process_sequence(&seq, &cfg)?;
        let n = run.confirmed().count();
        println!("negative {i}: confirmed {n} triggered {}/{}", run.pairs_triggered, run.pairs_processed);
        for r in run.confirmed() {
            println!("    confirmed {:?} @{}", r.bbox, r.first_frame);
        }
        false_hits += n;
    }
    println!("negative: {false_hits} confirmed");
    Ok(())
}
