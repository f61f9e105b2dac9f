use vidtext::edgemap::EdgeCache;
use vidtext::evaluation::synth::{generate_synthetic_clip, write_clip, BackgroundSpec, CaptionSpec, FlashSpec, SynthSpec};
use vidtext::filtering::{temporal_filter, TemporalMode, TemporalOutcome};
use vidtext::frame_io::{open_sequence, FrameSequence};
use vidtext::pipeline::{process_sequence, render_overlays, DetectionRun, PipelineConfig, RegionStatus};
use vidtext::quadtree::{localize, Rect};

fn caption(text: &str, x: usize, y: usize, start: usize, end: usize) -> CaptionSpec {
    CaptionSpec {
        text: text.into(),
        font_size: 24,
        x,
        y,
        color: 230,
        start,
        end,
    }
}

fn clip(count: usize, noise: f64, captions: Vec<CaptionSpec>) -> SynthSpec {
    SynthSpec {
        width: 352,
        height: 288,
        count,
        frame_rate: 25.0,
        seed: 5,
        background: BackgroundSpec {
            level: 40,
            noise,
            ..BackgroundSpec::default()
        },
        captions,
        blobs: Vec::new(),
        flashes: Vec::new(),
    }
}

fn run(spec: &SynthSpec) -> (DetectionRun, Vec<Rect>) {
    let (seq, truth) = generate_synthetic_clip(spec).unwrap();
    let run = process_sequence(&seq, &PipelineConfig::default()).unwrap();
    (run, truth.into_iter().map(|t| t.bbox).collect())
}

fn within(a: &Rect, b: &Rect, tol: usize) -> bool {
    a.x.abs_diff(b.x) <= tol
        && a.y.abs_diff(b.y) <= tol
        && a.right().abs_diff(b.right()) <= tol
        && a.bottom().abs_diff(b.bottom()) <= tol
}

fn contains(outer: &Rect, inner: &Rect) -> bool {
    outer.intersection(inner) == Some(*inner)
}

/// Temporal outcome of the first candidate produced by the pair (reference, reference + 1).
fn temporal_outcome(seq: &FrameSequence, reference: usize) -> TemporalOutcome {
    let cfg = PipelineConfig::default();
    let edges = EdgeCache::new(seq);
    let prev = edges_of(&edges, reference);
    let next = edges_of(&edges, reference + 1);
    let loc = localize(&prev, &next, &cfg.quad, reference).unwrap();
    let region = loc
        .regions
        .iter()
        .max_by_key(|r| r.extent.area())
        .expect("caption onset yields a candidate");
    temporal_filter(region, &edges, reference, &cfg.quad, &cfg.filter).unwrap()
}

fn edges_of(edges: &EdgeCache, i: usize) -> std::sync::Arc<vidtext::edgemap::BinaryEdgeFrame> {
    use vidtext::edgemap::EdgeSource;
    edges.binary_edges(i).unwrap()
}

#[test]
fn static_caption_is_confirmed_once() {
    let spec = clip(100, 0.0, vec![caption("NEWS", 100, 200, 10, 99)]);
    let (run, truth) = run(&spec);
    let confirmed: Vec<_> = run.confirmed().collect();
    assert_eq!(confirmed.len(), 1, "{:?}", run.regions);
    let r = confirmed[0];
    assert_eq!(r.first_frame, 10);
    assert_eq!(r.persistence, 50);
    assert!(within(&r.bbox, &truth[0], 4), "{:?} vs {:?}", r.bbox, truth[0]);
    assert!(contains(&r.bbox, &truth[0]), "{:?} must cover {:?}", r.bbox, truth[0]);
}

#[test]
fn full_window_match_confirms() {
    let spec = clip(80, 10.0, vec![caption("GOAL", 60, 40, 10, 70)]);
    let (seq, _) = generate_synthetic_clip(&spec).unwrap();
    match temporal_outcome(&seq, 9) {
        TemporalOutcome::Confirmed(text) => {
            assert_eq!(text.persistence, 50);
            assert_eq!(text.first_frame, 10);
        }
        other => panic!("expected confirmation, got {other:?}"),
    }
}

#[test]
fn removed_caption_is_rejected() {
    let spec = clip(80, 10.0, vec![caption("GOAL", 60, 40, 10, 30)]);
    let (seq, _) = generate_synthetic_clip(&spec).unwrap();
    match temporal_outcome(&seq, 9) {
        TemporalOutcome::Rejected { persistence } => assert!((18..50).contains(&persistence), "{persistence}"),
        other => panic!("expected rejection, got {other:?}"),
    }
    let run = process_sequence(&seq, &PipelineConfig::default()).unwrap();
    assert_eq!(run.confirmed().count(), 0);
    assert!(run.regions.iter().any(|r| r.status == RegionStatus::RejectedTemporal));
}

#[test]
fn scrolling_caption_is_rejected() {
    // one single-frame caption per frame, 2 px further right each time
    let captions = (10..90).map(|f| caption("SCORE", 20 + 2 * (f - 10), 120, f, f)).collect();
    let spec = clip(100, 0.0, captions);
    let (seq, _) = generate_synthetic_clip(&spec).unwrap();
    match temporal_outcome(&seq, 9) {
        TemporalOutcome::Rejected { persistence } => assert!(persistence <= 4, "{persistence}"),
        other => panic!("expected rejection, got {other:?}"),
    }
    let run = process_sequence(&seq, &PipelineConfig::default()).unwrap();
    assert!(run.pairs_triggered > 0);
    assert_eq!(run.confirmed().count(), 0);
}

#[test]
fn flash_triggers_but_confirms_nothing() {
    let mut spec = clip(120, 15.0, Vec::new());
    spec.flashes = vec![FlashSpec { frame: 40, offset: 90 }];
    let (run, _) = run(&spec);
    assert!(run.pairs_triggered >= 2);
    assert_eq!(run.confirmed().count(), 0);
}

#[test]
fn late_caption_is_undecided() {
    let spec = clip(100, 0.0, vec![caption("LIVE", 100, 100, 80, 99)]);
    let (run, _) = run(&spec);
    assert_eq!(run.confirmed().count(), 0);
    assert!(run.regions.iter().any(|r| r.status == RegionStatus::Undecided && r.first_frame == 80));
}

#[test]
fn two_captions_in_one_frame_share_an_overlay() {
    let spec = clip(
        100,
        0.0,
        vec![caption("NEWS", 40, 40, 12, 99), caption("20:45", 180, 220, 12, 99)],
    );
    let (seq, truth) = generate_synthetic_clip(&spec).unwrap();
    let run = process_sequence(&seq, &PipelineConfig::default()).unwrap();
    assert_eq!(run.confirmed().count(), 2, "{:?} vs {truth:?}", run.confirmed().collect::<Vec<_>>());
    for t in &truth {
        assert!(run.confirmed().any(|r| r.bbox.iou(&t.bbox) >= 0.5));
    }

    let dir = tempfile::tempdir().unwrap();
    assert_eq!(render_overlays(&run, &seq, dir.path()).unwrap(), 1);
    let path = dir.path().join("frame_000012_regions_0-1.png");
    let img = image::open(&path).unwrap().to_rgb8();
    for r in run.confirmed() {
        assert_eq!(img.get_pixel(r.bbox.x as u32, r.bbox.y as u32).0, [255, 0, 0]);
    }
}

#[test]
fn fixed_box_mode_confirms_static_caption() {
    let spec = clip(100, 10.0, vec![caption("MATCH", 90, 150, 10, 99)]);
    let (seq, truth) = generate_synthetic_clip(&spec).unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.filter.temporal_mode = TemporalMode::FixedBox;
    let run = process_sequence(&seq, &cfg).unwrap();
    let confirmed: Vec<_> = run.confirmed().collect();
    assert_eq!(confirmed.len(), 1);
    assert!(confirmed[0].bbox.iou(&truth[0].bbox) >= 0.5);
}

#[test]
fn thread_count_does_not_change_regions() {
    let spec = clip(
        140,
        20.0,
        vec![caption("SPORT", 30, 30, 8, 120), caption("2-1", 200, 200, 50, 139)],
    );
    let (seq, _) = generate_synthetic_clip(&spec).unwrap();
    let cfg = PipelineConfig::default();
    let results: Vec<_> = [1, 4]
        .into_iter()
        .map(|n| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            pool.install(|| process_sequence(&seq, &cfg).unwrap()).regions
        })
        .collect();
    assert!(!results[0].is_empty());
    assert_eq!(results[0], results[1]);
}

#[test]
fn files_on_disk_match_memory() {
    let spec = clip(90, 10.0, vec![caption("FINAL", 50, 60, 5, 89)]);
    let (seq, truth) = generate_synthetic_clip(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_clip(&seq, &truth, dir.path()).unwrap();
    let from_disk = open_sequence(dir.path()).unwrap();
    assert_eq!(from_disk.count(), 90);
    let cfg = PipelineConfig::default();
    let a = process_sequence(&seq, &cfg).unwrap();
    let b = process_sequence(&from_disk, &cfg).unwrap();
    assert_eq!(a.regions, b.regions);
    assert_eq!(a.confirmed().count(), 1);
}

#[test]
fn run_invariants_on_corpus_clips() {
    use vidtext::change_detect::histogram_difference;
    use vidtext::evaluation::corpus::{detection_suite, negative_suite};

    let clips = detection_suite(31).into_iter().take(3).chain(negative_suite(31).into_iter().take(2));
    for spec in clips {
        let (seq, _) = generate_synthetic_clip(&spec).unwrap();
        let mut last_triggered = usize::MAX;
        for theta in [0.0, 0.003, 0.02, 0.1, 0.5] {
            let cfg = PipelineConfig {
                theta,
                ..PipelineConfig::default()
            };
            let run = process_sequence(&seq, &cfg).unwrap();
            assert!(run.pairs_triggered <= last_triggered, "theta {theta}");
            last_triggered = run.pairs_triggered;
            for r in run.confirmed() {
                assert!(r.bbox.fits_in(seq.width(), seq.height()));
                assert!(r.first_frame >= 1);
                let d = histogram_difference(&seq.frame(r.first_frame - 1).unwrap(), &seq.frame(r.first_frame).unwrap())
                    .unwrap();
                assert!(d > theta);
            }
        }
    }
}
