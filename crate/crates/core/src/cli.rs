//! `vidtext` command line: `detect`, `eval` and `synth`.
//!
//! Exit codes: 0 on success, 1 when `eval --assert` finds a ratio below the
//! requested minimum, 2 on usage, configuration or I/O errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::evaluation::synth::{generate_synthetic_clip, write_clip, SynthSpec};
use crate::evaluation::{evaluate_regions, GroundTruthRegion, DEFAULT_IOU, DEFAULT_TEMPORAL_OVERLAP};
use crate::filtering::TemporalMode;
use crate::frame_io::open_sequence;
use crate::pipeline::{process_sequence_with, render_overlays, PipelineConfig, RunOptions, RunReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vidtext", version, about = "Static caption detection in frame sequences")]
pub struct Cli {
    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect static captions in a frame directory, glob or manifest.
    Detect(Box<DetectArgs>),
    /// Score a detection run against ground truth.
    Eval(EvalArgs),
    /// Render a synthetic clip with ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TemporalModeArg {
    Relocalize,
    FixedBox,
}

impl From<TemporalModeArg> for TemporalMode {
    fn from(m: TemporalModeArg) -> Self {
        match m {
            TemporalModeArg::Relocalize => TemporalMode::Relocalize,
            TemporalModeArg::FixedBox => TemporalMode::FixedBox,
        }
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub frames: PathBuf,
    /// Run JSON destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub overlay_dir: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub dump_edges: Option<PathBuf>,
    #[arg(long)]
    pub dump_quadtree: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ConfigFlags,
}

/// Command-line overrides; each maps onto one configuration key.
#[derive(Debug, Default, Args)]
pub struct ConfigFlags {
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub split_threshold: Option<f64>,
    #[arg(long)]
    pub min_block: Option<usize>,
    #[arg(long)]
    pub density_tol: Option<f64>,
    #[arg(long)]
    pub density_floor: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub shift: Option<usize>,
    #[arg(long)]
    pub min_area: Option<usize>,
    #[arg(long)]
    pub min_width: Option<usize>,
    #[arg(long)]
    pub min_height: Option<usize>,
    #[arg(long = "match-pos-tol")]
    pub match_pos_tol: Option<usize>,
    #[arg(long = "match-density-tol")]
    pub match_density_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub temporal_mode: Option<TemporalModeArg>,
    #[arg(long)]
    pub dedup_iou: Option<f64>,
}

impl ConfigFlags {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        macro_rules! set {
            ($field:ident => $target:expr) => {
                if let Some(v) = self.$field {
                    $target = v.into();
                }
            };
        }
        set!(theta => cfg.theta);
        set!(split_threshold => cfg.quad.split_threshold);
        set!(min_block => cfg.quad.min_block);
        set!(density_tol => cfg.quad.density_tol);
        set!(density_floor => cfg.quad.density_floor);
        set!(sigma => cfg.filter.sigma);
        set!(window => cfg.filter.window);
        set!(shift => cfg.filter.shift);
        set!(min_area => cfg.filter.min_area);
        set!(min_width => cfg.filter.min_width);
        set!(min_height => cfg.filter.min_height);
        set!(match_pos_tol => cfg.filter.match_pos_tol);
        set!(match_density_tol => cfg.filter.match_density_tol);
        set!(temporal_mode => cfg.filter.temporal_mode);
        set!(dedup_iou => cfg.dedup_iou);
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value_t = DEFAULT_IOU)]
    pub iou: f64,
    /// Minimum shared frames between detection and truth spans.
    #[arg(long, default_value_t = DEFAULT_TEMPORAL_OVERLAP)]
    pub temporal_overlap: usize,
    /// Exit with status 1 unless both ratios reach this value.
    #[arg(long)]
    pub assert: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn set_key<T: serde::de::DeserializeOwned>(target: &mut T, key: &str, value: &Value) -> Result<()> {
    *target = serde_json::from_value(value.clone()).map_err(|e| Error::config(key, e.to_string()))?;
    Ok(())
}

/// Applies a flat JSON object of configuration keys on top of `cfg`.
pub fn apply_config_map(cfg: &mut PipelineConfig, map: &Map<String, Value>) -> Result<()> {
    for (key, value) in map {
        match key.as_str() {
            "theta" => set_key(&mut cfg.theta, key, value)?,
            "split_threshold" => set_key(&mut cfg.quad.split_threshold, key, value)?,
            "min_block" => set_key(&mut cfg.quad.min_block, key, value)?,
            "density_tol" => set_key(&mut cfg.quad.density_tol, key, value)?,
            "density_floor" => set_key(&mut cfg.quad.density_floor, key, value)?,
            "sigma" => set_key(&mut cfg.filter.sigma, key, value)?,
            "window" => set_key(&mut cfg.filter.window, key, value)?,
            "shift" => set_key(&mut cfg.filter.shift, key, value)?,
            "min_area" => set_key(&mut cfg.filter.min_area, key, value)?,
            "min_width" => set_key(&mut cfg.filter.min_width, key, value)?,
            "min_height" => set_key(&mut cfg.filter.min_height, key, value)?,
            "match_pos_tol" => set_key(&mut cfg.filter.match_pos_tol, key, value)?,
            "match_density_tol" => set_key(&mut cfg.filter.match_density_tol, key, value)?,
            "temporal_mode" => set_key(&mut cfg.filter.temporal_mode, key, value)?,
            "dedup_iou" => set_key(&mut cfg.dedup_iou, key, value)?,
            _ => return Err(Error::config(key, "unknown configuration key")),
        }
    }
    Ok(())
}

/// Defaults, then the optional JSON file, then command-line flags; the result
/// is validated.
pub fn load_config(path: Option<&Path>, flags: &ConfigFlags) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = path {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: Value = serde_json::from_str(&text)?;
        let map = value
            .as_object()
            .ok_or_else(|| Error::config("config", "expected a JSON object"))?;
        apply_config_map(&mut cfg, map)?;
    }
    flags.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

pub fn run_detect(args: &DetectArgs) -> Result<i32> {
    let cfg = load_config(args.config.as_deref(), &args.overrides)?;
    let seq = open_sequence(&args.frames)?;
    let jobs = args.jobs.unwrap_or_else(num_cpus);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    let opts = RunOptions {
        dump_edges: args.dump_edges.clone(),
        dump_quadtree: args.dump_quadtree.clone(),
    };
    let run = pool.install(|| process_sequence_with(&seq, &cfg, &opts))?;
    let report = RunReport::new(args.frames.display().to_string(), &cfg, &run);
    write_output(args.out.as_deref(), &report.to_json()?)?;
    if let Some(dir) = &args.overlay_dir {
        let written = render_overlays(&run, &seq, dir)?;
        log::info!("wrote {written} overlay image(s) to {}", dir.display());
    }
    Ok(EXIT_OK)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn run_eval(args: &EvalArgs) -> Result<i32> {
    if !(args.iou > 0.0 && args.iou <= 1.0) {
        return Err(Error::config("iou", format!("{} not in (0, 1]", args.iou)));
    }
    let run: RunReport = read_json(&args.detections)?;
    let truth: Vec<GroundTruthRegion> = read_json(&args.truth)?;
    let report = evaluate_regions(&run.regions, &truth, args.iou, args.temporal_overlap);
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(min) = args.assert {
        let ok = |r: Option<f64>| r.is_some_and(|v| v >= min);
        if !(ok(report.ratio_over_detected) && ok(report.ratio_over_truth)) {
            eprintln!("eval: ratios below {min}");
            return Ok(EXIT_MISMATCH);
        }
    }
    Ok(EXIT_OK)
}

pub fn run_synth(args: &SynthArgs) -> Result<i32> {
    let mut spec: SynthSpec = read_json(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let (seq, truth) = generate_synthetic_clip(&spec)?;
    write_clip(&seq, &truth, &args.out)?;
    log::info!("wrote {} frame(s) and {} truth region(s)", seq.count(), truth.len());
    Ok(EXIT_OK)
}

fn num_cpus() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Parses `args` and runs the selected subcommand, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();

    let result = match &cli.command {
        Command::Detect(a) => run_detect(a),
        Command::Eval(a) => run_eval(a),
        Command::Synth(a) => run_synth(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("vidtext: {e}");
            EXIT_ERROR
        }
    }
}
