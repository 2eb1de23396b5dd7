//! Command line driver. Exit codes: 0 success, 2 input error, 3 validation
//! error, 4 internal invariant violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use echoiq::coherence::DEFAULT_GAMMA;
use echoiq::imaging::Spacing;
use echoiq::pipeline::{
    cmd_coherence, cmd_compare, cmd_evaluate, cmd_metrics, cmd_phantom, cmd_regions, parse_spacing,
    with_threads, ComparePair, Corpus, CorpusJob, EvaluateOptions, FrameSpec, RegionsJob,
};
use echoiq::regions::{View, ANNULUS_RADIUS_MM};
use echoiq::{Error, Result};

#[derive(Parser)]
#[command(
    name = "echoiq",
    version,
    about = "Regional image quality of cardiac ultrasound frames"
)]
struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed of the synthetic generators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Divide the myocardium of a label mask into regions (JSON).
    Regions {
        #[arg(long, visible_alias = "mask")]
        labels: PathBuf,
        #[arg(long)]
        sector: Option<PathBuf>,
        /// "depth,width" in mm per pixel.
        #[arg(long, value_parser = spacing)]
        spacing: Spacing,
        #[arg(long, value_parser = view)]
        view: View,
        #[arg(long, default_value_t = ANNULUS_RADIUS_MM)]
        annulus_radius: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regional metrics of one frame or of a corpus manifest (CSV).
    Metrics(MetricsArgs),
    /// Coherence image (CIMG1) from channel data (CHDF1).
    Coherence {
        #[arg(long)]
        channels: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long, value_parser = spacing, default_value = "1")]
        spacing: Spacing,
        #[arg(long)]
        out: PathBuf,
    },
    /// SSIM, PSNR and RPE of predicted against target coherence images.
    Compare {
        #[arg(long, required = true, num_args = 1..)]
        target: Vec<PathBuf>,
        #[arg(long, required = true, num_args = 1..)]
        pred: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate metrics on train+val frames and score them on test frames.
    Evaluate {
        #[arg(long, required = true, num_args = 1..)]
        metrics: Vec<PathBuf>,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        splits: PathBuf,
        /// Add pairwise Wilcoxon tests between metrics.
        #[arg(long)]
        wilcoxon: bool,
        /// Record the generation time in the report.
        #[arg(long)]
        timestamp: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic corpus with annotations and a split manifest.
    Phantom {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        frames: usize,
        #[arg(long, default_value_t = 96)]
        width: usize,
        #[arg(long, default_value_t = 96)]
        height: usize,
        /// Channel count of synthetic channel data; 0 writes none.
        #[arg(long, default_value_t = 0)]
        elements: usize,
        #[arg(long, default_value_t = 3)]
        annotators: u32,
    },
}

#[derive(Args)]
struct MetricsArgs {
    /// Corpus manifest; replaces the single-frame options.
    #[arg(long, conflicts_with_all = ["bmode", "labels"])]
    manifest: Option<PathBuf>,
    #[arg(long, requires_all = ["labels", "spacing"])]
    bmode: Option<PathBuf>,
    #[arg(long, visible_alias = "mask")]
    labels: Option<PathBuf>,
    #[arg(long)]
    sector: Option<PathBuf>,
    #[arg(long, value_parser = spacing)]
    spacing: Option<Spacing>,
    /// Region file; without it the regions are divided for `--view`.
    #[arg(long)]
    regions: Option<PathBuf>,
    #[arg(long, value_parser = view)]
    view: Option<View>,
    #[arg(long)]
    coherence: Option<PathBuf>,
    /// Defaults to the B-mode file name without extension.
    #[arg(long)]
    frame_id: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn spacing(s: &str) -> Result<Spacing, String> {
    parse_spacing(s).map_err(|e| e.to_string())
}

fn view(s: &str) -> Result<View, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

fn metric_frames(a: MetricsArgs) -> Result<Vec<FrameSpec>> {
    if let Some(m) = a.manifest {
        return Ok(Corpus::load(m)?.frames);
    }
    let (Some(bmode), Some(labels), Some(spacing)) = (a.bmode, a.labels, a.spacing) else {
        return Err(Error::InvalidInput(
            "give --manifest, or --bmode with --labels and --spacing".into(),
        ));
    };
    Ok(vec![FrameSpec {
        id: a.frame_id.unwrap_or_else(|| stem(&bmode)),
        view: a.view,
        spacing,
        bmode,
        labels,
        sector: a.sector,
        regions: a.regions,
        coherence: a.coherence,
        channels: None,
    }])
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    with_threads(cli.threads, move || match cli.command {
        Command::Regions {
            labels,
            sector,
            spacing,
            view,
            annulus_radius,
            out,
        } => {
            let job = RegionsJob {
                labels,
                sector,
                spacing,
                view,
                annulus_radius_mm: annulus_radius,
            };
            cmd_regions(&job, &out).map(drop)
        }
        Command::Metrics(args) => {
            let out = args.out.clone();
            cmd_metrics(&metric_frames(args)?, &out).map(drop)
        }
        Command::Coherence {
            channels,
            gamma,
            spacing,
            out,
        } => cmd_coherence(&channels, spacing, gamma, &out).map(drop),
        Command::Compare { target, pred, out } => {
            if target.len() != pred.len() {
                return Err(Error::InvalidInput(format!(
                    "{} targets but {} predictions",
                    target.len(),
                    pred.len()
                )));
            }
            let pairs: Vec<ComparePair> = target
                .into_iter()
                .zip(pred)
                .map(|(t, p)| ComparePair {
                    frame_id: stem(&t),
                    target: t,
                    pred: p,
                })
                .collect();
            cmd_compare(&pairs, &out).map(drop)
        }
        Command::Evaluate {
            metrics,
            annotations,
            splits,
            wilcoxon,
            timestamp,
            out,
        } => {
            let options = EvaluateOptions {
                wilcoxon,
                timestamp,
            };
            cmd_evaluate(&metrics, &annotations, &splits, options, &out).map(drop)
        }
        Command::Phantom {
            out,
            frames,
            width,
            height,
            elements,
            annotators,
        } => {
            let job = CorpusJob {
                out_dir: out,
                frames,
                width,
                height,
                elements,
                annotators,
                seed,
            };
            cmd_phantom(&job).map(drop)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
