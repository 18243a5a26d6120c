use std::path::PathBuf;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand};
use iotrisk::ensemble::ModelFamily;
use iotrisk::eval::SelectionMetric;
use iotrisk::nvd::CpePart;
use iotrisk::pipeline::Mode;

const MODES: [&str; 3] = ["wo_dr", "tsne", "pca"];
const FAMILIES: [&str; 3] = ["gbdt", "rfc", "voting"];

fn mode_parser() -> impl TypedValueParser<Value = Mode> {
    PossibleValuesParser::new(MODES).map(|s| s.parse::<Mode>().expect("closed set"))
}

fn family_parser() -> impl TypedValueParser<Value = ModelFamily> {
    PossibleValuesParser::new(FAMILIES).map(|s| s.parse::<ModelFamily>().expect("closed set"))
}

fn metric_parser() -> impl TypedValueParser<Value = SelectionMetric> {
    PossibleValuesParser::new(["accuracy", "macro_f1"]).map(|s| s.parse::<SelectionMetric>().expect("closed set"))
}

fn part_parser() -> impl TypedValueParser<Value = CpePart> {
    PossibleValuesParser::new(["a", "o", "h"]).map(|s| s.parse::<CpePart>().expect("closed set"))
}

fn key_value(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))
}

/// Predicts the CVSS v3 severity class of IoT devices.
#[derive(Debug, Parser)]
#[command(name = "iotrisk", version)]
pub struct Cli {
    /// key=value settings file; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Seed for every random choice (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker thread cap; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract IoT device candidates from NVD JSON feeds.
    Ingest(IngestArgs),
    /// Validate a corpus, or synthesize one, and print its class distribution.
    Build(BuildArgs),
    /// Fit the feature pipeline and a model; writes the model and its encoder sidecar.
    Train(TrainArgs),
    /// Repeated stratified cross-validation, one row per mode.
    Cv(CvArgs),
    /// Grid search over model parameters.
    Tune(TuneArgs),
    /// Stratified hold-out evaluation with per-class metrics.
    Evaluate(EvaluateArgs),
    /// Score device rows with a trained model.
    Predict(PredictArgs),
    /// Drop one feature at a time and report the change in CV score.
    Ablate(AblateArgs),
    /// Corpus summary and feature correlations.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// NVD JSON 1.1 feed, plain or gzipped. Repeatable.
    #[arg(long = "feed", required = true, value_name = "PATH")]
    pub feeds: Vec<PathBuf>,
    /// Keyword rule file.
    #[arg(long, value_name = "PATH")]
    pub rules: PathBuf,
    /// Only count CPEs of these parts (a, o, h). Default: all.
    #[arg(long, value_delimiter = ',', value_parser = part_parser())]
    pub part: Vec<CpePart>,
    /// Earliest publication year kept.
    #[arg(long, default_value_t = iotrisk::nvd::FIRST_YEAR)]
    pub since: i32,
    /// Candidate CSV to write.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Corpus or enriched candidate CSV to validate.
    #[arg(long, value_name = "PATH", conflicts_with = "synthesize", required_unless_present = "synthesize")]
    pub corpus: Option<PathBuf>,
    /// Generate the synthetic corpus instead of reading one.
    #[arg(long)]
    pub synthesize: bool,
    /// Signal strength of the synthetic corpus, in [0, 1].
    #[arg(long, requires = "synthesize")]
    pub signal: Option<f64>,
    /// Where to write the validated corpus.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct CorpusArgs {
    /// Labelled corpus CSV. Default: the bundled synthetic corpus.
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    #[arg(long, value_parser = family_parser())]
    pub model: Option<ModelFamily>,
    /// Large parameter profile (10000 stages, learning rate 0.01, depth 500).
    #[arg(long, conflicts_with = "set")]
    pub paper_params: bool,
    /// Model parameter override, e.g. `--set learning_rate=0.1`. Repeatable.
    #[arg(long, value_name = "KEY=VALUE", value_parser = key_value)]
    pub set: Vec<(String, String)>,
}

#[derive(Debug, Args, Default)]
pub struct FeatureArgs {
    /// Number of k-means clusters for the tsne and pca modes.
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Fail on categorical values missing from the training corpus instead of warning.
    #[arg(long)]
    pub reject_unseen: bool,
}

#[derive(Debug, Args, Default)]
pub struct FoldArgs {
    /// Folds per repeat.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct OutArgs {
    /// Also write the report here; a `.csv` extension selects CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long, value_parser = mode_parser())]
    pub mode: Option<Mode>,
    /// Model file; the sidecar goes to `<PATH>.encoders.json`.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    /// One or more modes, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = mode_parser())]
    pub mode: Vec<Mode>,
    #[command(flatten)]
    pub folds: FoldArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long, value_parser = mode_parser())]
    pub mode: Option<Mode>,
    #[command(flatten)]
    pub folds: FoldArgs,
    /// Grid file, or inline `key=v1,v2;key2=...`.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_parser = metric_parser())]
    pub metric: Option<SelectionMetric>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long, value_parser = mode_parser())]
    pub mode: Option<Mode>,
    /// Share of rows held out for testing.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file written by `train`.
    #[arg(long, value_name = "PATH")]
    pub model_file: PathBuf,
    /// Device CSV: the corpus header without risk_score.
    #[arg(long, value_name = "PATH")]
    pub devices: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long, value_parser = mode_parser())]
    pub mode: Option<Mode>,
    #[command(flatten)]
    pub folds: FoldArgs,
    #[arg(long, value_parser = metric_parser())]
    pub metric: Option<SelectionMetric>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Correlations at or above this magnitude are listed.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Writes the full correlation matrix as CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::error::ErrorKind;

    fn parse(argv: &str) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("iotrisk").chain(argv.split_whitespace()))
    }

    #[test]
    fn train_with_model_and_seed() {
        let cli = parse("train --corpus c.csv --model gbdt --seed 7 --out m.txt").unwrap();
        assert_eq!(cli.seed, Some(7));
        let Command::Train(t) = cli.command else { panic!("not train") };
        assert_eq!(t.model.model, Some(ModelFamily::Gbdt));
        assert_eq!(t.corpus.corpus, Some(PathBuf::from("c.csv")));
    }

    #[test]
    fn cv_folds_and_repeats() {
        let cli = parse("cv --k 5 --repeats 2").unwrap();
        let Command::Cv(c) = cli.command else { panic!("not cv") };
        assert_eq!((c.folds.k, c.folds.repeats), (Some(5), Some(2)));
    }

    #[test]
    fn cv_accepts_mode_list() {
        let Command::Cv(c) = parse("cv --mode wo_dr,tsne --mode pca").unwrap().command else { panic!() };
        assert_eq!(c.mode, vec![Mode::WoDr, Mode::Tsne, Mode::Pca]);
    }

    #[test]
    fn unknown_model_is_rejected() {
        let e = parse("train --model xgb --out m.txt").unwrap_err();
        assert_eq!(e.kind(), ErrorKind::InvalidValue);
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_flag_is_rejected() {
        assert_eq!(parse("cv --folds 5").unwrap_err().kind(), ErrorKind::UnknownArgument);
    }

    #[test]
    fn paper_params_conflict_with_overrides() {
        let e = parse("cv --paper-params --set learning_rate=0.1").unwrap_err();
        assert_eq!(e.kind(), ErrorKind::ArgumentConflict);
    }

    #[test]
    fn build_needs_a_source() {
        assert!(parse("build").is_err());
        assert!(parse("build --synthesize --corpus x.csv").is_err());
        assert!(parse("build --synthesize --signal 0.8").is_ok());
    }

    #[test]
    fn set_requires_key_value() {
        assert!(parse("cv --set learning_rate").is_err());
    }
}
