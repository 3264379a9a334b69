//! `doubtscore` command line.
//!
//! Data goes to stdout (or `--output`), diagnostics to stderr. Exit codes:
//! 0 success, 1 fatal input/IO error, 2 record validation failure under
//! `--fail-fast`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::ingest_report::{
    compare_models, doubt_histogram, parse_records, read_reports, score_batch, write_reports, HistogramField,
    InputFormat, ScoreReport,
};
use crate::matrix_scores::{
    certainty_matrix, certainty_offset_matrix, doubt_matrix, is_invertible, max_doubt_score, row_l1_max,
    SquareMatrix,
};
use crate::projective::certainty_projection;
use crate::score_core::{sort_descending, LogitVector, ProbabilityVector};
use crate::train_demo::{make_blobs, metrics_csv, train, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_RECORD: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "doubtscore",
    version,
    about = "Certainty and doubt scores for classifier outputs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a prediction file and write one JSON report per record
    Score {
        input: PathBuf,
        #[command(flatten)]
        read: ReadOpts,
        /// Worker threads (default: available parallelism)
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the certainty and doubt matrices of one vector
    Matrix {
        /// Comma-separated probabilities
        #[arg(long, conflicts_with = "logits", required_unless_present = "logits")]
        probs: Option<String>,
        /// Comma-separated logits (softmax is applied first)
        #[arg(long, allow_hyphen_values = true)]
        logits: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Histogram of a doubt field as CSV
    Hist {
        input: PathBuf,
        #[command(flatten)]
        read: ReadOpts,
        #[arg(long, default_value = "theta", value_parser = parse_field)]
        field: HistogramField,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the doubt of two models scored on the same ids
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        read: ReadOpts,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sort a probability vector and print its certainty points on the projective line
    Project {
        /// Comma-separated probabilities
        probs: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train a small classifier on synthetic blobs and print epoch metrics as CSV
    Train {
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 100)]
        per_class: usize,
        #[arg(long, default_value_t = 0.3)]
        spread: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ReadOpts {
    /// Input format; inferred from the file extension when omitted
    #[arg(long, value_parser = parse_format)]
    format: Option<InputFormat>,
    /// Inputs are score reports (output of `score`) rather than predictions
    #[arg(long)]
    reports: bool,
    /// Abort on the first invalid record (exit code 2)
    #[arg(long)]
    fail_fast: bool,
}

fn parse_format(s: &str) -> std::result::Result<InputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_field(s: &str) -> std::result::Result<HistogramField, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Comma-separated decimals.
pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| Error::invalid(format!("not a number: {t:?} in vector {s:?}")))
        })
        .collect()
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Record { .. } => EXIT_RECORD,
                _ => EXIT_FATAL,
            }
        }
    }
}

fn execute(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Score {
            input,
            read,
            threads,
            output,
        } => {
            let reports = load_scored(&input, &read, threads, stderr)?;
            emit(output.as_deref(), stdout, |w| write_reports(w, &reports))
        }
        Command::Matrix {
            probs,
            logits,
            output,
        } => {
            let p = match (probs, logits) {
                (Some(s), _) => ProbabilityVector::new(parse_vector(&s)?)?,
                (None, Some(s)) => LogitVector::new(parse_vector(&s)?)?.softmax(),
                (None, None) => return Err(Error::invalid("one of --probs or --logits is required")),
            };
            let c = certainty_matrix(&p);
            let inv = is_invertible(&c);
            let out = MatrixOutput {
                probs: p.entries(),
                c_offset: certainty_offset_matrix(&p),
                c: c.matrix().clone(),
                d: doubt_matrix(&p).matrix().clone(),
                max_doubt: max_doubt_score(&p)?,
                row_l1_max: row_l1_max(&c),
                invertible: inv.invertible,
                condition: ExtendedReal::from(inv.condition),
            };
            emit_json(output.as_deref(), stdout, &out)
        }
        Command::Hist {
            input,
            read,
            field,
            bins,
            output,
        } => {
            let reports = load_scored(&input, &read, None, stderr)?;
            let h = doubt_histogram(&reports, field, bins)?;
            emit(output.as_deref(), stdout, |w| w.write_all(h.to_csv().as_bytes()))
        }
        Command::Compare { a, b, read, output } => {
            let ra = load_scored(&a, &read, None, stderr)?;
            let rb = load_scored(&b, &read, None, stderr)?;
            let cmp = compare_models(&ra, &rb)?;
            if !cmp.missing_in_a.is_empty() || !cmp.missing_in_b.is_empty() {
                let _ = writeln!(
                    stderr,
                    "warning: {} ids only in A, {} only in B",
                    cmp.missing_in_b.len(),
                    cmp.missing_in_a.len()
                );
            }
            emit_json(output.as_deref(), stdout, &cmp)
        }
        Command::Project { probs, output } => {
            let p = ProbabilityVector::new(parse_vector(&probs)?)?;
            let (sorted, _) = sort_descending(&p);
            let f = certainty_projection(&sorted)?;
            emit_json(output.as_deref(), stdout, &f)
        }
        Command::Train {
            lambda,
            epochs,
            lr,
            seed,
            classes,
            per_class,
            spread,
            output,
        } => {
            let data = make_blobs(classes, per_class, spread, seed)?;
            let cfg = TrainConfig {
                lambda,
                epochs,
                learning_rate: lr,
                seed,
            };
            let outcome = train(&data, &cfg)?;
            if let Some(last) = outcome.metrics.last() {
                let _ = writeln!(
                    stderr,
                    "final: acc {:.4} ce {:.6} doubt_cost {:.6}",
                    last.accuracy, last.cross_entropy, last.doubt_cost
                );
            }
            let csv = metrics_csv(&outcome.metrics);
            emit(output.as_deref(), stdout, |w| w.write_all(csv.as_bytes()))
        }
    }
}

#[derive(Serialize)]
struct MatrixOutput<'a> {
    probs: &'a [f64],
    c_offset: SquareMatrix<f64>,
    c: SquareMatrix<f64>,
    d: SquareMatrix<ExtendedReal<f64>>,
    max_doubt: ExtendedReal<f64>,
    row_l1_max: f64,
    invertible: bool,
    condition: ExtendedReal<f64>,
}

fn load_scored(
    path: &Path,
    read: &ReadOpts,
    threads: Option<usize>,
    stderr: &mut dyn Write,
) -> Result<Vec<ScoreReport>> {
    if read.reports {
        return read_reports(path);
    }
    let format = read.format.unwrap_or_else(|| InputFormat::from_path(path));
    let parsed = parse_records(path, format, read.fail_fast)?;
    for e in &parsed.errors {
        let _ = writeln!(
            stderr,
            "warning: {}: line {}: {} (skipped)",
            path.display(),
            e.line,
            e.message
        );
    }
    score_batch(&parsed.records, threads)
}

fn emit(
    output: Option<&Path>,
    stdout: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    match output {
        Some(path) => {
            let file = File::create(path).map_err(io_err(path))?;
            let mut w = BufWriter::new(file);
            body(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
        }
        None => body(stdout)
            .and_then(|_| stdout.flush())
            .map_err(io_err(Path::new("<stdout>"))),
    }
}

fn emit_json<S: Serialize>(output: Option<&Path>, stdout: &mut dyn Write, value: &S) -> Result<()> {
    emit(output, stdout, |w| {
        serde_json::to_writer(&mut *w, value)?;
        w.write_all(b"\n")
    })
}
