use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use npk_core::models::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "npk", version, about = "Soil macronutrient estimation from V-I sweeps")]
pub struct Cli {
    /// Plain-text `key = value` settings; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Master seed for every random choice (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic phantom dataset.
    Gen(GenArgs),
    /// Extract features from a directory of V-I sweep files.
    Featurize(FeaturizeArgs),
    /// Fit one model on a dataset and save it.
    Train(TrainArgs),
    /// Cross-validate models and write comparison reports.
    Eval(EvalArgs),
    /// Predict soil nutrient loads with a saved model.
    Predict(PredictArgs),
    /// Unit-chain calculator.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(short, long)]
    pub output: PathBuf,
    /// Pipetting step in mL.
    #[arg(long)]
    pub step: Option<f64>,
    /// Total mixture volume in mL.
    #[arg(long)]
    pub total: Option<f64>,
    /// Relative noise on simulated currents.
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// Directory of headerless `voltage,current` CSV files.
    pub dir: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Emit the labeled six-column dataset instead of soil samples.
    #[arg(long)]
    pub dataset: bool,
    /// `stem = pH` file for sweeps whose name carries no label.
    #[arg(long, value_name = "FILE")]
    pub ph_table: Option<PathBuf>,
    /// Currents in the files are milliamperes.
    #[arg(long)]
    pub milliamps: bool,
    #[arg(long, value_name = "M")]
    pub separation: Option<f64>,
    #[arg(long, value_name = "M2")]
    pub area: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PreprocessingArg {
    Raw,
    Pca,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    PerFold,
    Global,
}

#[derive(Debug, Args, Clone)]
pub struct ModelOptions {
    /// Neighbours for k-NN.
    #[arg(long)]
    pub neighbours: Option<usize>,
    /// Trees in the forest.
    #[arg(long)]
    pub trees: Option<usize>,
    /// Training epochs for the MLP.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Use identity instead of ReLU hidden activations in the MLP.
    #[arg(long)]
    pub linear_activation: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(short, long)]
    pub data: PathBuf,
    #[arg(short, long, value_parser = parse_kind)]
    pub model: ModelKind,
    #[arg(long, value_enum, default_value = "raw")]
    pub preprocessing: PreprocessingArg,
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub options: ModelOptions,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(short, long)]
    pub data: PathBuf,
    /// Comma-separated model kinds, or `all`.
    #[arg(long, value_parser = parse_models)]
    pub models: Option<Models>,
    /// Number of folds.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub preprocessing: Option<PreprocessingArg>,
    #[arg(long, value_enum, default_value = "per-fold")]
    pub scaling: ScopeArg,
    /// Directory for report CSVs and plots.
    #[arg(short, long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub options: ModelOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    MeanOfRatios,
    RatioOfMeans,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Lab,
    Prediction,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Saved model file.
    #[arg(short, long)]
    pub model: PathBuf,
    /// Soil sample CSV.
    #[arg(short, long)]
    pub samples: PathBuf,
    /// Calibration file with `model.nutrient = factor` lines.
    #[arg(long, value_name = "FILE")]
    pub calibration: Option<PathBuf>,
    /// Fit factors on the first N samples and report on the rest.
    #[arg(long, value_name = "N", conflicts_with = "calibration")]
    pub calibrate_first: Option<usize>,
    #[arg(long, value_enum, default_value = "mean-of-ratios")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "lab")]
    pub error_basis: BasisArg,
    /// Write the fitted factors here.
    #[arg(long, value_name = "FILE")]
    pub save_calibration: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitArg {
    /// Compound concentration, mmol/L.
    Mmol,
    /// Nutrient mass concentration, mg/L.
    Ppm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompoundArg {
    Hno3,
    H3po4,
    Koh,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    pub value: f64,
    #[arg(long, value_enum, default_value = "mmol")]
    pub from: UnitArg,
    #[arg(long, value_enum, default_value = "koh")]
    pub compound: CompoundArg,
    /// Calibration factor applied to the concentration.
    #[arg(long, default_value_t = 1.0)]
    pub factor: f64,
    /// Bulk density, g/cm³.
    #[arg(long)]
    pub density: Option<f64>,
    /// Soil layer depth, m.
    #[arg(long)]
    pub depth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Models(pub Vec<ModelKind>);

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: npk_core::Error| e.to_string())
}

fn parse_models(s: &str) -> Result<Models, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Models(ModelKind::ALL.to_vec()));
    }
    let mut kinds = Vec::new();
    for part in s.split(',') {
        let kind = parse_kind(part)?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    Ok(Models(kinds))
}
