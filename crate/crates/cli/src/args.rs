use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tricube::decoder::{DEFAULT_MIN_AREA_PX, DEFAULT_TAU};
use tricube::kernel::{KernelFamily, DEFAULT_GAMMA};
use tricube::loss::DEFAULT_FP_RATIO;

#[derive(Debug, Parser)]
#[command(name = "tricube", version, about = "Oriented-box heatmap encoder, decoder and evaluator")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kernel {
    Tricube,
    Gaussian,
    Binary,
    Effective,
}

impl From<Kernel> for KernelFamily {
    fn from(k: Kernel) -> Self {
        match k {
            Kernel::Tricube => KernelFamily::Tricube,
            Kernel::Gaussian => KernelFamily::Gaussian,
            Kernel::Binary => KernelFamily::BinaryRect,
            Kernel::Effective => KernelFamily::EffectiveRect,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Style {
    Voc,
    Coco,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Interp {
    /// Area under the precision envelope.
    All,
    /// Eleven recall points.
    Eleven,
}

/// Annotation input shared by several subcommands.
#[derive(Debug, Args)]
pub struct AnnotationArgs {
    /// DOTA annotation file.
    #[arg(long)]
    pub ann: PathBuf,
    /// Category names, one per line (default: names in order of first appearance).
    #[arg(long)]
    pub categories: Option<PathBuf>,
    /// Image size as WxH (default: the file's imagesize header, else the annotation extent).
    #[arg(long, value_parser = parse_size)]
    pub size: Option<(usize, usize)>,
    /// Image pixels per heatmap pixel.
    #[arg(long, default_value_t = 2)]
    pub downsample: usize,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let w: usize = w.parse().map_err(|_| format!("bad width {w:?}"))?;
    let h: usize = h.parse().map_err(|_| format!("bad height {h:?}"))?;
    if w == 0 || h == 0 {
        return Err("size must be positive".into());
    }
    Ok((w, h))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render annotations into a THM1 heatmap.
    Encode {
        #[command(flatten)]
        ann: AnnotationArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Kernel::Tricube)]
        kernel: Kernel,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
    },
    /// Write the size-weight mask of an annotation file as THM1.
    Swm {
        #[command(flatten)]
        ann: AnnotationArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract detections from a THM1 heatmap.
    Decode {
        #[arg(long)]
        heatmap: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long = "min-area", default_value_t = DEFAULT_MIN_AREA_PX)]
        min_area: usize,
        /// Detection file, or a directory with one file per class under --per-class.
        #[arg(long)]
        out: PathBuf,
        /// Category names; channel i is line i (default: class0, class1, ...).
        #[arg(long)]
        categories: Option<PathBuf>,
        /// Multiply coordinates by this to get image pixels.
        #[arg(long, default_value_t = 1)]
        downsample: usize,
        /// Write `<out>/<category>.txt` per class instead of one merged file.
        #[arg(long = "per-class")]
        per_class: bool,
    },
    /// Encode and decode synthetic scenes and score the result.
    Roundtrip {
        #[arg(long, default_value_t = 200)]
        scenes: usize,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long, value_enum, default_value_t = Kernel::Tricube)]
        kernel: Kernel,
        /// Inclusive box-count range per scene, as MIN..MAX or N.
        #[arg(long, default_value = "1..50", value_parser = parse_range)]
        boxes: (usize, usize),
        #[arg(long)]
        json: bool,
    },
    /// Sampled, size-weighted MSE between two heatmaps.
    Loss {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[command(flatten)]
        ann: AnnotationArgs,
        #[arg(long, default_value_t = DEFAULT_FP_RATIO)]
        ratio: usize,
    },
    /// Run the cascade refinement on a feature map.
    Refine {
        /// THM1 feature map.
        #[arg(long = "in")]
        input: PathBuf,
        /// TWT1 weights (default: random weights from --seed).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Output classes for random weights.
        #[arg(long, default_value_t = 1)]
        classes: usize,
        /// Save the weights actually used as TWT1.
        #[arg(long = "save-weights")]
        save_weights: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        steps: usize,
        /// Writes `<prefix>1.thm1` ... `<prefix><steps>.thm1`.
        #[arg(long = "out-prefix")]
        out_prefix: String,
    },
    /// Score detection files against ground-truth files, matched by file name.
    Eval {
        #[arg(long)]
        dets: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        categories: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Style::Voc)]
        style: Style,
        #[arg(long, default_value_t = tricube::eval::DEFAULT_BUDGET)]
        budget: usize,
        /// IoU threshold for the VOC style.
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
        #[arg(long, value_enum, default_value_t = Interp::All)]
        interp: Interp,
        #[arg(long)]
        json: bool,
    },
    /// Draw detections over a PNG image.
    Overlay {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        dets: PathBuf,
        #[arg(long)]
        categories: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic scene as a DOTA annotation file.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "512x512", value_parser = parse_size)]
        size: (usize, usize),
        #[arg(long, default_value = "1..20", value_parser = parse_range)]
        boxes: (usize, usize),
        /// Side lengths in image pixels, as MIN..MAX.
        #[arg(long, default_value = "16..128", value_parser = parse_range)]
        sides: (usize, usize),
        #[arg(long = "max-iou", default_value_t = 0.05)]
        max_iou: f64,
        #[arg(long, default_value_t = 1)]
        classes: usize,
    },
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad number {t:?}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b)?),
        None => {
            let n = parse(s)?;
            (n, n)
        }
    };
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok((lo, hi))
}
