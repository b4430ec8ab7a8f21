use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use scriptdet_core::annotation::{DetectionLayout, ImageFilter, ParseMode};
use scriptdet_core::classifier::ScoreMode;
use scriptdet_core::commands;
use scriptdet_core::config::{Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "scriptdet", version, about = "Unseen-script text detection evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory of gt_<image_id>.txt files.
    #[arg(long, global = true)]
    gt_dir: Option<PathBuf>,
    /// CSV manifest image_id,width,height.
    #[arg(long, global = true)]
    images: Option<PathBuf>,
    /// Detection file (combined layout) or directory (per-image layout).
    #[arg(long, global = true)]
    detections: Option<PathBuf>,
    /// combined | per-image
    #[arg(long, global = true, value_parser = parse_layout)]
    layout: Option<DetectionLayout>,
    /// Region embedding file.
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// Class embedding table.
    #[arg(long, global = true)]
    class_embeddings: Option<PathBuf>,
    /// Cross-script f-measure matrix CSV.
    #[arg(long, global = true)]
    matrix: Option<PathBuf>,

    /// Match threshold for evaluation (default 0.5)
    #[arg(long, global = true)]
    iou_thresh: Option<f64>,
    /// Overlap above which NMS suppresses (default 0.3)
    #[arg(long, global = true)]
    nms_iou: Option<f64>,
    /// Minimum detector confidence kept by NMS (default 0.5)
    #[arg(long, global = true)]
    nms_score: Option<f64>,
    /// AP ranking score: detector | similarity | product
    #[arg(long, global = true)]
    score_mode: Option<ScoreMode>,
    /// f-measure at or above which scripts count as close (default 0.6)
    #[arg(long, global = true)]
    threshold_close: Option<f64>,
    /// f-measure at or above which scripts count as loosely related (default 0.3)
    #[arg(long, global = true)]
    threshold_loose: Option<f64>,
    /// unseen-only | all
    #[arg(long, global = true, value_parser = parse_filter)]
    image_filter: Option<ImageFilter>,
    /// Extra margin, in pixels, around each crop rectangle.
    #[arg(long, global = true)]
    padding: Option<f64>,
    /// Fail on the first malformed line (default)
    #[arg(long, global = true, conflicts_with = "lenient")]
    strict: bool,
    /// Skip and count malformed lines instead of failing.
    #[arg(long, global = true)]
    lenient: bool,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Parse inputs and report per-script counts.
    Validate,
    /// Non-maximum suppression of detections.
    Nms,
    /// Rotated crop rectangles for every detection.
    CropSpecs,
    /// Script assignment by nearest class embedding.
    Classify,
    /// Score detections and script assignments.
    Evaluate,
    /// Cross-script proximity edges and box statistics.
    Analyze,
}

fn parse_layout(s: &str) -> Result<DetectionLayout, String> {
    match s {
        "combined" => Ok(DetectionLayout::Combined),
        "per-image" => Ok(DetectionLayout::PerImage),
        _ => Err(format!("expected combined or per-image, got {s:?}")),
    }
}

fn parse_filter(s: &str) -> Result<ImageFilter, String> {
    match s {
        "unseen-only" => Ok(ImageFilter::UnseenOnly),
        "all" => Ok(ImageFilter::All),
        _ => Err(format!("expected unseen-only or all, got {s:?}")),
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let parse_mode = match (cli.strict, cli.lenient) {
        (true, _) => Some(ParseMode::Strict),
        (_, true) => Some(ParseMode::Lenient),
        _ => None,
    };
    let overrides = Overrides {
        gt_dir: cli.gt_dir,
        images: cli.images,
        detections: cli.detections,
        detection_layout: cli.layout,
        embeddings: cli.embeddings,
        class_embeddings: cli.class_embeddings,
        matrix: cli.matrix,
        iou_thresh: cli.iou_thresh,
        nms_iou: cli.nms_iou,
        nms_score: cli.nms_score,
        close: cli.threshold_close,
        loose: cli.threshold_loose,
        score_mode: cli.score_mode,
        image_filter: cli.image_filter,
        parse_mode,
        padding: cli.padding,
        out_dir: cli.out,
    };
    let cfg = RunConfig::load(cli.config.as_deref(), overrides)?;

    let summary = match cli.command {
        Command::Validate => serde_json::to_string(&commands::cmd_validate(&cfg)?)?,
        Command::Nms => serde_json::to_string(&commands::cmd_nms(&cfg)?)?,
        Command::CropSpecs => serde_json::to_string(&commands::cmd_crop_specs(&cfg)?)?,
        Command::Classify => serde_json::to_string(&commands::cmd_classify(&cfg)?)?,
        Command::Evaluate => {
            let r = commands::cmd_evaluate(&cfg)?;
            format!(
                "{{\"map\":{},\"f_measure\":{}}}",
                r.class_aware.map_or("null".into(), |c| c.map.to_string()),
                r.combined.f_measure
            )
        }
        Command::Analyze => {
            let a = commands::cmd_analyze(&cfg)?;
            let edges = |p: &[scriptdet_core::crossscript::Proximity]| p.iter().map(|p| p.close.len()).sum::<usize>();
            format!(
                "{{\"close_edges\":{},\"loose_edges\":{}}}",
                edges(&a.proximity.close),
                edges(&a.proximity.loose)
            )
        }
    };
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SCRIPTDET_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
