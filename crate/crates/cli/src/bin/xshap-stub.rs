//! Test double speaking the external-model line protocol.
//!
//! `echo` returns column 0 clamped to at least 0.1, `glm` evaluates
//! `exp(alpha + betas · x)`, `short` drops the last line of its first reply
//! and exits, `negative` answers -1.0 for every row.

use std::io::{BufRead, Write};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use xshap_core::models::external::serve;
use xshap_core::{FnModel, LogGlm, Predictor};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Behaviour {
    Echo,
    Glm,
    Short,
    Negative,
}

#[derive(Debug, Parser)]
struct Args {
    #[arg(value_enum)]
    behaviour: Behaviour,
    #[arg(long, default_value_t = 1)]
    features: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    betas: Vec<f64>,
}

/// Forwards the handshake, then every line but the last of one reply, then
/// exits the process.
struct DropLast<W: Write> {
    inner: W,
    pending: Vec<u8>,
}

impl<W: Write> Write for DropLast<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.pending.extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        let text = String::from_utf8_lossy(&self.pending).into_owned();
        self.pending.clear();
        let lines: Vec<&str> = text.lines().collect();
        // the handshake reply is a single "OK" and passes through
        if lines == ["OK"] {
            writeln!(self.inner, "OK")?;
            return self.inner.flush();
        }
        for line in &lines[..lines.len().saturating_sub(1)] {
            writeln!(self.inner, "{line}")?;
        }
        self.inner.flush()?;
        std::process::exit(0)
    }
}

fn run<P: Predictor>(model: &P, input: impl BufRead, output: impl Write) -> ExitCode {
    match serve(model, input, output) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("xshap-stub: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let stdin = std::io::stdin().lock();
    let stdout = std::io::stdout().lock();
    match args.behaviour {
        Behaviour::Echo => run(&FnModel::new(args.features, |x: &[f64]| x[0].max(0.1)), stdin, stdout),
        Behaviour::Negative => run(&FnModel::new(args.features, |_: &[f64]| -1.0), stdin, stdout),
        Behaviour::Short => run(
            &FnModel::new(args.features, |x: &[f64]| x[0].max(0.1)),
            stdin,
            DropLast {
                inner: stdout,
                pending: Vec::new(),
            },
        ),
        Behaviour::Glm => run(&LogGlm::new(args.alpha, args.betas), stdin, stdout),
    }
}
