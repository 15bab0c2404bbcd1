use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hsa_circle::bench::{self, BenchError, SynthSpec};
use hsa_circle::detector::{self, DetectorConfig};
use hsa_circle::imaging::{self, EdgeMap, GrayImage, ImageError};
use hsa_circle::{HsaConfig, Weights};

const EXIT_ARGS: u8 = 2;
const EXIT_IO: u8 = 3;

/// Circle detection on edge maps with a discrete harmony search optimizer.
#[derive(Debug, Parser)]
#[command(name = "hsa-circle", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect the single best circle.
    Detect(DetectArgs),
    /// Detect circles repeatedly, masking each one found.
    DetectMulti(DetectArgs),
    /// Generate a synthetic binary edge map with known circles.
    Synth(SynthArgs),
    /// Run repeated detections on synthetic images and report statistics.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct Tuning {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    hms: usize,
    #[arg(long, default_value_t = 0.7)]
    hmcr: f64,
    #[arg(long, default_value_t = 0.3)]
    par: f64,
    #[arg(long, default_value_t = 2.0)]
    bw: f64,
    #[arg(long, default_value_t = 200)]
    ni: usize,
    /// Acceptance ceiling on J.
    #[arg(long, default_value_t = 0.1)]
    mth: f64,
    #[arg(long, default_value_t = 10)]
    max_circles: usize,
    #[arg(long, default_value_t = 2.0)]
    mask_band: f64,
    #[arg(long, default_value_t = 5.0)]
    rmin: f64,
    /// Validation coverage threshold [default: 1 - mth].
    #[arg(long)]
    coverage_min: Option<f64>,
    /// Largest angular gap allowed by validation, degrees.
    #[arg(long, default_value_t = 90.0)]
    max_gap: f64,
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

impl Tuning {
    fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            hsa: HsaConfig {
                hms: self.hms,
                hmcr: self.hmcr,
                par: self.par,
                bw: self.bw,
                ni: self.ni,
                seed: self.seed,
                ..HsaConfig::default()
            },
            m_th: self.mth,
            max_circles: self.max_circles,
            mask_band: self.mask_band,
            r_min: self.rmin,
            coverage_min: self.coverage_min.unwrap_or(1.0 - self.mth),
            max_gap_deg: self.max_gap,
        }
    }

    fn weights(&self) -> Weights {
        Weights {
            eta: self.eta,
            mu: self.mu,
        }
    }

    fn checked(&self) -> Result<(DetectorConfig, Weights), CliError> {
        let cfg = self.detector();
        cfg.validate().map_err(CliError::Args)?;
        let w = self.weights();
        if !(w.eta > 0.0 && w.mu > 0.0) {
            return Err(CliError::Args("eta and mu must be positive".into()));
        }
        Ok((cfg, w))
    }

    fn config_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump {
            detector: DetectorConfig,
            weights: Weights,
        }
        serde_json::to_string_pretty(&Dump {
            detector: self.detector(),
            weights: self.weights(),
        })
        .expect("config serializes")
    }
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// Input image (PGM P5 or PNG).
    input: PathBuf,
    /// Treat the input as a binary 0/255 edge map and skip Canny.
    #[arg(long)]
    edges: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write an overlay of the detected circles (PGM, or PNG by extension).
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// Include wall-clock time in the report.
    #[arg(long)]
    timing: bool,
    #[arg(long, default_value_t = imaging::DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = imaging::DEFAULT_LOW)]
    low: f64,
    #[arg(long, default_value_t = imaging::DEFAULT_HIGH)]
    high: f64,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    circles: usize,
    /// Image side length in pixels.
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 20)]
    radius_min: u32,
    #[arg(long, default_value_t = 100)]
    radius_max: u32,
    /// Fraction of pixels set as uniform noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Keep only this fraction of the circumference (single circle).
    #[arg(long)]
    arc: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output edge map (PGM, or PNG by extension).
    #[arg(long, short, default_value = "synth.pgm")]
    out: PathBuf,
    /// Write the ground truth circles as JSON.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Number of synthetic images.
    #[arg(long, default_value_t = 50)]
    images: usize,
    #[arg(long, default_value_t = 1)]
    circles: usize,
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 20)]
    radius_min: u32,
    #[arg(long, default_value_t = 100)]
    radius_max: u32,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Detections per image.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the trial statistics as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Debug)]
enum CliError {
    Args(String),
    Io(String),
}

impl From<ImageError> for CliError {
    fn from(e: ImageError) -> Self {
        match e {
            ImageError::InvalidParameter(msg) => CliError::Args(msg),
            other => CliError::Io(other.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        CliError::Args(e.to_string())
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_input(args: &DetectArgs) -> Result<(GrayImage, EdgeMap), CliError> {
    let img = imaging::load_gray(&args.input)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.input.display())))?;
    let edges = if args.edges {
        imaging::edge_map_from_binary(&img)
            .map_err(|e| CliError::Io(format!("{}: {e}", args.input.display())))?
    } else {
        imaging::canny_edges(&img, args.low, args.high, args.sigma)?
    };
    Ok((img, edges))
}

fn detect(args: &DetectArgs, multi: bool) -> Result<(), CliError> {
    if args.tuning.print_config {
        println!("{}", args.tuning.config_json());
        return Ok(());
    }
    let (cfg, _) = args.tuning.checked()?;
    let (img, edges) = load_input(args)?;
    let report = if multi {
        detector::detect_multi(&edges, &cfg)
    } else {
        detector::detect_single(&edges, &cfg)
    };
    let json = report.to_json(args.timing);
    match &args.json {
        Some(path) => write_text(path, &json)?,
        None => println!("{json}"),
    }
    if report.circles.is_empty() {
        eprintln!("no circle detected");
    }
    if let Some(path) = &args.overlay {
        imaging::save_gray(path, &detector::render_overlay(&img, &report))?;
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let range = (args.radius_min, args.radius_max);
    let (edges, truth) = match args.arc {
        Some(fraction) => {
            if args.circles != 1 {
                return Err(CliError::Args("--arc requires --circles 1".into()));
            }
            bench::generate_arc(args.size, args.size, range, fraction, args.seed)?
        }
        None => SynthSpec::new(args.size, args.size, args.circles, range, args.noise, args.seed)
            .generate()?,
    };
    imaging::save_edge_map(&args.out, &edges)?;
    if let Some(path) = &args.truth {
        let json = serde_json::to_string_pretty(&truth).expect("truth serializes");
        write_text(path, &json)?;
    }
    Ok(())
}

fn run_bench(args: &BenchArgs) -> Result<(), CliError> {
    if args.tuning.print_config {
        println!("{}", args.tuning.config_json());
        return Ok(());
    }
    let (cfg, weights) = args.tuning.checked()?;
    let images = (0..args.images)
        .map(|i| {
            SynthSpec::new(
                args.size,
                args.size,
                args.circles,
                (args.radius_min, args.radius_max),
                args.noise,
                bench::derive_seed(args.tuning.seed, i, usize::MAX),
            )
            .generate()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let stats = bench::run_trials(&images, &cfg, &weights, args.repeats, args.jobs)?;
    print!("{}", stats.to_table("HSA"));
    if let Some(path) = &args.json {
        write_text(path, &stats.to_json())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_ARGS)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Detect(args) => detect(args, false),
        Command::DetectMulti(args) => detect(args, true),
        Command::Synth(args) => synth(args),
        Command::Bench(args) => run_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Args(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ARGS)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
