//! Single-worker throughput on 1000-frame 352x288 clips.
//!
//! `cargo bench --bench throughput`

use vidtext::evaluation::corpus::{busy_clip, measure_throughput, static_clip, Throughput};
use vidtext::evaluation::synth::generate_synthetic_clip;
use vidtext::pipeline::PipelineConfig;

const FRAMES: usize = 1000;

fn report(name: &str, t: &Throughput) {
    println!(
        "{name:<10} frames {:>5}  pairs {:>5}  triggered {:>5}  {:>8.2} s  {:>9.1} pairs/s  {:>8.1} triggered/s",
        t.frames,
        t.pairs_processed,
        t.pairs_triggered,
        t.elapsed_seconds,
        t.pairs_per_second(),
        t.triggered_per_second()
    );
}

fn main() -> vidtext::Result<()> {
    let cfg = PipelineConfig::default();
    let (busy, _) = generate_synthetic_clip(&busy_clip(FRAMES, 11))?;
    let (quiet, _) = generate_synthetic_clip(&static_clip(FRAMES, 12))?;
    let busy = measure_throughput(&busy, &cfg)?;
    let quiet = measure_throughput(&quiet, &cfg)?;
    report("triggered", &busy);
    report("static", &quiet);
    println!(
        "requirement: >= 2 triggered pairs/s ({:.1}), >= 25 pairs/s on the scan path ({:.1})",
        busy.triggered_per_second(),
        quiet.pairs_per_second()
    );
    Ok(())
}
