//! Run configuration: command-line flags layered over an optional TOML file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::filter::Filter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Glm,
    Gbt,
    Extern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplainMode {
    Multiplicative,
    Additive,
    Both,
}

impl ExplainMode {
    pub fn multiplicative(self) -> bool {
        self != ExplainMode::Additive
    }

    pub fn additive(self) -> bool {
        self != ExplainMode::Multiplicative
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExplainMode::Multiplicative => "multiplicative",
            ExplainMode::Additive => "additive",
            ExplainMode::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "xshap", version, about = "Multiplicative and additive Shapley explanations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-row contributions for selected test rows.
    Explain(RunArgs),
    /// Global importance, summary pairs, partial dependence and groups.
    Metrics(RunArgs),
    /// Local accuracy, convergence, oracle and closed-form checks.
    Validate(RunArgs),
    /// Write a seeded log-linear dataset as CSV.
    Synth(SynthArgs),
}

/// Flags shared by explain, metrics and validate. Every field is optional
/// so a config file can supply it.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub extern_cmd: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ExplainMode>,
    #[arg(long)]
    pub ref_size: Option<usize>,
    #[arg(long)]
    pub coalitions: Option<usize>,
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Test-set positions `a:b` (half-open) or a single position.
    #[arg(long)]
    pub rows: Option<String>,
    /// Repeatable; each filter defines one group.
    #[arg(long = "filter")]
    #[serde(default, rename = "filter")]
    pub filters: Vec<String>,
    #[arg(long)]
    pub pd_feature: Option<String>,
    #[arg(long)]
    pub pd_bins: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub features: usize,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Comma-separated coefficients; drawn from the seed when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub betas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.0)]
    pub correlation: f64,
    #[arg(long)]
    pub seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const DEFAULT_REF_SIZE: usize = 100;
pub const DEFAULT_COALITIONS: usize = 1000;
pub const DEFAULT_SPLIT: f64 = 0.7;
pub const DEFAULT_PD_BINS: usize = 25;

/// Fully resolved and validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: PathBuf,
    pub target: String,
    pub model: ModelKind,
    pub extern_cmd: Option<String>,
    pub mode: ExplainMode,
    pub ref_size: usize,
    pub coalitions: usize,
    pub split: f64,
    pub seed: u64,
    pub rows: Option<(usize, usize)>,
    pub filters: Vec<Filter>,
    pub pd_feature: Option<String>,
    pub pd_bins: usize,
    pub format: Format,
    pub jobs: usize,
    pub trees: usize,
    pub depth: usize,
    pub learning_rate: f64,
}

impl RunArgs {
    /// Fields set on `self` win over those of `file`.
    fn over(self, file: RunArgs) -> RunArgs {
        RunArgs {
            config: self.config,
            data: self.data.or(file.data),
            target: self.target.or(file.target),
            model: self.model.or(file.model),
            extern_cmd: self.extern_cmd.or(file.extern_cmd),
            mode: self.mode.or(file.mode),
            ref_size: self.ref_size.or(file.ref_size),
            coalitions: self.coalitions.or(file.coalitions),
            split: self.split.or(file.split),
            seed: self.seed.or(file.seed),
            rows: self.rows.or(file.rows),
            filters: if self.filters.is_empty() { file.filters } else { self.filters },
            pd_feature: self.pd_feature.or(file.pd_feature),
            pd_bins: self.pd_bins.or(file.pd_bins),
            format: self.format.or(file.format),
            jobs: self.jobs.or(file.jobs),
            trees: self.trees.or(file.trees),
            depth: self.depth.or(file.depth),
            learning_rate: self.learning_rate.or(file.learning_rate),
        }
    }

    pub fn resolve(self) -> Result<RunConfig> {
        let merged = match &self.config {
            Some(path) => {
                let file = read_config(path)?;
                self.over(file)
            }
            None => self,
        };
        merged.into_config()
    }

    fn into_config(self) -> Result<RunConfig> {
        let missing = |flag: &str| CliError::Config(format!("--{flag} is required"));
        let model = self.model.unwrap_or(ModelKind::Glm);
        if model == ModelKind::Extern && self.extern_cmd.is_none() {
            return Err(missing("extern-cmd"));
        }
        let cfg = RunConfig {
            data: self.data.ok_or_else(|| missing("data"))?,
            target: self.target.ok_or_else(|| missing("target"))?,
            model,
            extern_cmd: self.extern_cmd,
            mode: self.mode.unwrap_or(ExplainMode::Multiplicative),
            ref_size: self.ref_size.unwrap_or(DEFAULT_REF_SIZE),
            coalitions: self.coalitions.unwrap_or(DEFAULT_COALITIONS),
            split: self.split.unwrap_or(DEFAULT_SPLIT),
            seed: self.seed.ok_or_else(|| missing("seed"))?,
            rows: self.rows.as_deref().map(parse_rows).transpose()?,
            filters: self.filters.iter().map(|f| Filter::parse(f)).collect::<Result<_>>()?,
            pd_feature: self.pd_feature,
            pd_bins: self.pd_bins.unwrap_or(DEFAULT_PD_BINS),
            format: self.format.unwrap_or(Format::Json),
            jobs: self
                .jobs
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            trees: self.trees.unwrap_or(100),
            depth: self.depth.unwrap_or(3),
            learning_rate: self.learning_rate.unwrap_or(0.1),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.split > 0.0 && self.split < 1.0) {
            return bad(format!("--split {} not in (0, 1)", self.split));
        }
        if self.ref_size == 0 {
            return bad("--ref-size must be at least 1".into());
        }
        if self.coalitions < 2 {
            return bad(format!("--coalitions {} must be at least 2", self.coalitions));
        }
        if self.pd_bins == 0 {
            return bad("--pd-bins must be at least 1".into());
        }
        if self.jobs == 0 {
            return bad("--jobs must be at least 1".into());
        }
        if self.trees == 0 || self.depth == 0 {
            return bad("--trees and --depth must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("--learning-rate {} not in (0, 1]", self.learning_rate));
        }
        Ok(())
    }
}

fn read_config(path: &Path) -> Result<RunArgs> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
}

/// `a:b` is the half-open range of positions, `a` alone a single position.
pub fn parse_rows(text: &str) -> Result<(usize, usize)> {
    let bad = || CliError::Config(format!("cannot parse row selector {text:?}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let (a, b) = match text.split_once(':') {
        Some((a, b)) => (num(a)?, num(b)?),
        None => {
            let a = num(text)?;
            (a, a + 1)
        }
    };
    if a >= b {
        return Err(bad());
    }
    Ok((a, b))
}
