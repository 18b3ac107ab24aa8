//! Command-line front end: CSV ingestion, seeded splitting, model fitting,
//! and the `explain`, `metrics`, `validate` and `synth` commands.

pub mod config;
pub mod data;
pub mod error;
pub mod explain;
pub mod filter;
pub mod metrics;
pub mod output;
pub mod pipeline;
pub mod split;
pub mod synth;
pub mod validate;

use config::{Cli, Command, SynthArgs};
pub use error::{CliError, Result};

/// Text for standard output and, when a validation check failed, the
/// error that sets the exit code.
pub struct Outcome {
    pub stdout: String,
    pub failure: Option<CliError>,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let ok = |stdout| Outcome { stdout, failure: None };
    match cli.command {
        Command::Explain(args) => Ok(ok(explain::cmd_explain(&args.resolve()?)?)),
        Command::Metrics(args) => Ok(ok(metrics::cmd_metrics(&args.resolve()?)?)),
        Command::Validate(args) => {
            let (stdout, pass) = validate::cmd_validate(&args.resolve()?)?;
            let failure = (!pass).then(|| CliError::Numerical("validation checks failed".into()));
            Ok(Outcome { stdout, failure })
        }
        Command::Synth(args) => cmd_synth(&args).map(ok),
    }
}

fn cmd_synth(args: &SynthArgs) -> Result<String> {
    let cfg = synth::SynthConfig {
        n_rows: args.n,
        n_features: args.features,
        alpha: args.alpha,
        betas: args.betas.clone(),
        noise: args.noise,
        correlation: args.correlation,
        seed: args.seed,
    };
    let csv = synth::generate(&cfg)?.to_csv();
    match &args.out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(csv),
    }
}
