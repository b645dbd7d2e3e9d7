//! `specbench`: synthesize scenes, simulate the spectral-filter camera,
//! train filter banks, classify and evaluate.
//!
//! Exit status: 0 on success, 1 on runtime failure (i/o, diverged
//! training), 2 on usage or validation errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "specbench", version, about = "Programmable spectral-filter camera workbench")]
struct Cli {
    /// key=value file supplying defaults for any flag (flag names with `_`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "SPECBENCH_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a labeled scene: writes `<out>.hsc` and `<out>.lbl`.
    Synth(SynthArgs),
    /// Import a header-less band-sequential cube.
    ImportRaw(ImportRawArgs),
    /// Simulate the camera measuring a cube through a filter bank.
    Capture(CaptureArgs),
    /// Baseline: capture every band, then project digitally.
    Scan(ScanArgs),
    /// Train a classifier and write its filter bank.
    Train {
        #[command(subcommand)]
        kind: TrainKind,
    },
    /// Extract the filter bank of a saved model.
    Extract(ExtractArgs),
    /// Print the number of images needed to measure a bank.
    Plan(PlanArgs),
    /// Per-pixel classification of measured or scanned features.
    Classify(ClassifyArgs),
    /// Confusion matrix and accuracy of a prediction.
    Evaluate(EvaluateArgs),
    /// One-vs-rest ROC curve of one class's scores.
    Roc(RocArgs),
    /// Test accuracy against the number of filters.
    Sweep(SweepArgs),
    /// Simulated code and wavelength calibration, PSF estimation and MTF.
    Calibrate(CalibrateArgs),
    /// MTF of a sector star through an aperture, before and after
    /// deconvolution.
    Mtf(MtfArgs),
}

#[derive(Args, Default)]
pub struct GridArgs {
    #[arg(long)]
    pub wl_min: Option<f64>,
    #[arg(long)]
    pub wl_max: Option<f64>,
    #[arg(long)]
    pub bands: Option<usize>,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub classes: Option<usize>,
    /// Scene size as WxH.
    #[arg(long)]
    pub size: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Abundance-driven mixtures instead of pure pixels.
    #[arg(long)]
    pub mixed: bool,
    /// Dominant-class abundance of mixed pixels.
    #[arg(long)]
    pub purity: Option<f64>,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    /// Relative std of multiplicative per-value noise; 0 keeps the exact
    /// mixing model, whose spectra span only `classes - 1` directions.
    #[arg(long)]
    pub noise: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output prefix.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ImportRawArgs {
    #[arg(long)]
    pub raw_bsq: Option<PathBuf>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub bands: Option<usize>,
    /// f32 or u16.
    #[arg(long)]
    pub dtype: Option<String>,
    #[arg(long)]
    pub wl_min: Option<f64>,
    #[arg(long)]
    pub wl_max: Option<f64>,
    /// Ground truth as raw little-endian u16, one per pixel.
    #[arg(long)]
    pub gt_raw: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Default)]
pub struct OpticsArgs {
    /// `default`, `identity`, or a PBM mask file.
    #[arg(long)]
    pub aperture: Option<String>,
    /// Photon count at the brightest sum-image pixel; omit for noiseless.
    #[arg(long)]
    pub noise_photons: Option<f64>,
    #[arg(long)]
    pub read_sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct CaptureArgs {
    #[arg(long)]
    pub cube: Option<PathBuf>,
    #[arg(long)]
    pub bank: Option<PathBuf>,
    /// `ideal`, `binary`, or `column-height:ROWS:DC_ROWS`.
    #[arg(long)]
    pub slm: Option<String>,
    #[command(flatten)]
    pub optics: OpticsArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub cube: Option<PathBuf>,
    #[arg(long)]
    pub bank: Option<PathBuf>,
    #[command(flatten)]
    pub optics: OpticsArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Classes to leave out, comma-separated.
    #[arg(long)]
    pub skip: Option<String>,
    /// Train,validation,test fractions.
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Blur the cube through this aperture before training, so the
    /// classifier sees spectra as the camera measures them.
    #[arg(long)]
    pub aperture: Option<String>,
}

#[derive(Args)]
pub struct MlpArgs {
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// `adam` or `sgd`.
    #[arg(long)]
    pub optimizer: Option<String>,
}

#[derive(Subcommand)]
pub enum TrainKind {
    /// One-vs-all linear SVM; one filter per class.
    Svm {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        reg: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Pick the regularization by cross-validation.
        #[arg(long)]
        search: bool,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Network whose first layer is the filter bank.
    Mlp {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        q: Option<usize>,
        #[command(flatten)]
        mlp: MlpArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Difference of the two class means; needs a two-class label map.
    Matched {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub bank: Option<PathBuf>,
    #[arg(long)]
    pub slm: Option<String>,
}

#[derive(Args)]
pub struct ClassifyArgs {
    /// Measurement set written by `capture`.
    #[arg(long, conflicts_with = "features")]
    pub measurements: Option<PathBuf>,
    /// Feature stack written by `scan`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, conflicts_with = "bank")]
    pub model: Option<PathBuf>,
    /// Bank alone: offsets as scores, or a threshold for a single filter.
    #[arg(long)]
    pub bank: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Sum-image floor below which pixels are left unclassified.
    #[arg(long)]
    pub floor: Option<f64>,
    /// Label map whose class names the prediction reuses.
    #[arg(long)]
    pub names_from: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Score stack for the ROC of `--class`.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub class: Option<usize>,
    #[arg(long)]
    pub images_captured: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct RocArgs {
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub class: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Filter counts, comma-separated and ascending.
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[command(flatten)]
    pub mlp: MlpArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub aperture: Option<String>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Gaussian noise on laser captures, relative to their peak.
    #[arg(long)]
    pub noise_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub spectral_nsr: Option<f64>,
    #[arg(long)]
    pub wiener_nsr: Option<f64>,
    #[arg(long)]
    pub star_size: Option<usize>,
    #[arg(long)]
    pub spokes: Option<usize>,
    /// Output prefix.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct MtfArgs {
    #[arg(long)]
    pub aperture: Option<String>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Band whose PSF blurs the star; defaults to the centre band.
    #[arg(long)]
    pub band: Option<usize>,
    #[arg(long)]
    pub wiener_nsr: Option<f64>,
    #[arg(long)]
    pub star_size: Option<usize>,
    #[arg(long)]
    pub spokes: Option<usize>,
    /// Output prefix.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
