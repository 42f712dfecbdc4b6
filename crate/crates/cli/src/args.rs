use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use skinspace::classifiers::DistanceKind;
use skinspace::colorspace::{QuadraticVariant, TransformMode};
use skinspace::dataset::SpaceTag;

#[derive(Debug, Parser)]
#[command(
    name = "skinspace",
    version,
    about = "Learned color spaces and classifiers for pixel-level skin detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a color-space matrix that makes FCM segment skin well
    Optimize(OptimizeArgs),
    /// Train a classifier on sampled or curated pixels
    Train(TrainArgs),
    /// Detect skin in one image
    Detect(DetectArgs),
    /// Score a directory of image/mask pairs
    Evaluate(EvaluateArgs),
    /// Render a ROC curve CSV as SVG
    RocPlot(RocPlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Linear,
    Quadratic,
}

impl From<ModeArg> for TransformMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Linear => TransformMode::Linear,
            ModeArg::Quadratic => TransformMode::Quadratic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum VariantArg {
    AsPrinted,
    ElementwiseSquare,
}

impl From<VariantArg> for QuadraticVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::AsPrinted => QuadraticVariant::AsPrinted,
            VariantArg::ElementwiseSquare => QuadraticVariant::ElementwiseSquare,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum SpaceArg {
    RgbNorm,
    LabNorm,
    NewLinear,
    NewQuadratic,
}

impl From<SpaceArg> for SpaceTag {
    fn from(s: SpaceArg) -> Self {
        match s {
            SpaceArg::RgbNorm => SpaceTag::RgbNorm,
            SpaceArg::LabNorm => SpaceTag::LabNorm,
            SpaceArg::NewLinear => SpaceTag::NewLinear,
            SpaceArg::NewQuadratic => SpaceTag::NewQuadratic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum ClassifierArg {
    Mlp,
    Anfis,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum DistanceArg {
    Euclidean,
    Mahalanobis,
}

impl From<DistanceArg> for DistanceKind {
    fn from(d: DistanceArg) -> Self {
        match d {
            DistanceArg::Euclidean => DistanceKind::Euclidean,
            DistanceArg::Mahalanobis => DistanceKind::Mahalanobis,
        }
    }
}

/// FCM settings used inside the optimizer and for ANFIS initialization.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct FcmArgs {
    /// FCM fuzzifier exponent [default: 2]
    #[arg(long)]
    pub fcm_m: Option<f64>,
    /// FCM iteration cap [default: 100]
    #[arg(long)]
    pub fcm_max_iter: Option<usize>,
    /// FCM stops when the objective improves by less than this [default: 0.01]
    #[arg(long)]
    pub fcm_min_improvement: Option<f64>,
}

/// Epoch and step controls shared by the MLP and ANFIS trainers.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct TrainerArgs {
    /// Epoch cap [default: 1000]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// MLP mean-squared-error goal [default: 1e-10]
    #[arg(long)]
    pub mse_goal: Option<f64>,
    /// ANFIS root-mean-squared-error goal [default: 0]
    #[arg(long)]
    pub rmse_goal: Option<f64>,
    /// Initial gradient step [default: 0.01]
    #[arg(long)]
    pub initial_step: Option<f64>,
    /// Step multiplier after an improving epoch [default: 1.1]
    #[arg(long)]
    pub step_increase: Option<f64>,
    /// Step multiplier after a rejected epoch [default: 0.9]
    #[arg(long)]
    pub step_decrease: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct OptimizeArgs {
    /// JSON file of option values; flags take precedence
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output matrix JSON [default: matrix.json]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Training image
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Ground-truth skin mask for the training image
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Transform applied to normalized RGB [default: quadratic]
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Reading of the quadratic transform [default: as_printed]
    #[arg(long, value_enum)]
    pub quadratic_variant: Option<VariantArg>,
    /// Swarm size [default: 15]
    #[arg(long)]
    pub particles: Option<usize>,
    /// Swarm iterations [default: 30]
    #[arg(long)]
    pub iterations: Option<usize>,
    /// [default: 0.8]
    #[arg(long)]
    pub inertia_init: Option<f64>,
    /// [default: 0.4]
    #[arg(long)]
    pub inertia_final: Option<f64>,
    /// [default: 1.75]
    #[arg(long)]
    pub c1_init: Option<f64>,
    /// [default: 0.5]
    #[arg(long)]
    pub c1_final: Option<f64>,
    /// [default: 0.5]
    #[arg(long)]
    pub c2_init: Option<f64>,
    /// [default: 1.75]
    #[arg(long)]
    pub c2_final: Option<f64>,
    /// Lower bound of matrix entries [default: -5]
    #[arg(long, allow_negative_numbers = true)]
    pub position_min: Option<f64>,
    /// Upper bound of matrix entries [default: 5]
    #[arg(long, allow_negative_numbers = true)]
    pub position_max: Option<f64>,
    /// Lower velocity bound [default: -0.5]
    #[arg(long, allow_negative_numbers = true)]
    pub velocity_min: Option<f64>,
    /// Upper velocity bound [default: 0.5]
    #[arg(long, allow_negative_numbers = true)]
    pub velocity_max: Option<f64>,
    /// Position step multiplier [default: 1]
    #[arg(long)]
    pub c_step: Option<f64>,
    /// Evaluate fitness on every n-th pixel [default: 1]
    #[arg(long)]
    pub stride: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub fcm: FcmArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Classifier family
    #[arg(value_enum)]
    pub kind: Option<ClassifierArg>,
    /// JSON file of option values; flags take precedence
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Sampling and initialization seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output model JSON [default: model.json]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory of x.png / x_mask.png training pairs
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Curated sample file; image indices refer to the sorted pairs in --data
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Random skin pixels to sample [default: 108]
    #[arg(long)]
    pub n_skin: Option<usize>,
    /// Random non-skin pixels to sample [default: 108]
    #[arg(long)]
    pub n_nonskin: Option<usize>,
    /// Feature space [default: the matrix's space, else rgb_norm]
    #[arg(long, value_enum)]
    pub space: Option<SpaceArg>,
    /// Transform matrix JSON, required for the new_* spaces
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// MLP hidden units [default: 18]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// ANFIS rule count [default: 15]
    #[arg(long)]
    pub rules: Option<usize>,
    /// Distance model metric [default: euclidean]
    #[arg(long, value_enum)]
    pub distance: Option<DistanceArg>,
    /// Percentile of training skin distances used as threshold [default: 99]
    #[arg(long)]
    pub percentile: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub trainer: TrainerArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub fcm: FcmArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct DetectArgs {
    /// JSON file of option values; flags take precedence
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Accepted for uniformity; detection is deterministic
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: .]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trained model JSON
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Image to segment
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Transform matrix JSON for models trained in a new_* space
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Score at or above which a pixel is skin [default: 0.5]
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Disk radius of the cleanup structuring element [default: 4]
    #[arg(long)]
    pub radius: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    /// JSON file of option values; flags take precedence
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Accepted for uniformity; evaluation is deterministic
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: .]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trained model JSON
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Directory of x.png / x_mask.png test pairs
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Transform matrix JSON for models trained in a new_* space
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Score at or above which a pixel is skin [default: 0.5]
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Disk radius of the cleanup structuring element [default: 4]
    #[arg(long)]
    pub radius: Option<usize>,
    /// Count pixels of the cleaned mask instead of the raw one
    #[arg(long)]
    #[serde(default)]
    pub clean: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct RocPlotArgs {
    /// JSON file of option values; flags take precedence
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Accepted for uniformity; plotting is deterministic
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output SVG [default: roc.svg]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// ROC CSV written by evaluate
    #[arg(long)]
    pub roc: Option<PathBuf>,
    /// Plot title [default: ROC]
    #[arg(long)]
    pub title: Option<String>,
}
