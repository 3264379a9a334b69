//! Prediction files in, score reports out.
//!
//! Input is JSONL (`{"id": .., "probs": [..]}` or `{"id": .., "logits": [..], "label": k}`)
//! or CSV with header `id,kind,v1..vN[,label]` and `kind` one of `prob`/`logit`.
//! Reports are JSONL; extended reals are written as numbers or the string `"inf"`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{doubt_cost_at, raw_doubt_cost_at};
use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::matrix_scores::max_doubt_score;
use crate::score_core::{
    neg_log_certainty_at, pairwise_certainty_at, pairwise_doubt_at, raw_certainty_at, raw_doubt_at,
    LogitVector, ProbabilityVector,
};

type Ext = ExtendedReal<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl InputFormat {
    /// `.csv` means CSV, anything else JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        }
    }
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            other => Err(Error::invalid(format!(
                "unknown format {other:?}, expected jsonl or csv"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Probs,
    Logits,
}

impl FromStr for RecordKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "prob" | "probs" => Ok(RecordKind::Probs),
            "logit" | "logits" => Ok(RecordKind::Logits),
            other => Err(Error::invalid(format!(
                "unknown kind {other:?}, expected prob or logit"
            ))),
        }
    }
}

/// One validated classifier output.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub id: String,
    pub kind: RecordKind,
    pub values: Vec<f64>,
    pub label: Option<usize>,
}

impl PredictionRecord {
    pub fn new(
        id: impl Into<String>,
        kind: RecordKind,
        values: Vec<f64>,
        label: Option<usize>,
    ) -> Result<Self> {
        let n = values.len();
        let values = match kind {
            RecordKind::Probs => ProbabilityVector::new(values)?.into_vec(),
            RecordKind::Logits => LogitVector::new(values)?.entries().to_vec(),
        };
        if let Some(l) = label {
            if l >= n {
                return Err(Error::invalid(format!("label {l} out of range for {n} classes")));
            }
        }
        Ok(Self {
            id: id.into(),
            kind,
            values,
            label,
        })
    }
}

/// A record that failed to parse or validate.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedRecords {
    pub records: Vec<PredictionRecord>,
    /// Rejected records; empty when parsing with `fail_fast`.
    pub errors: Vec<RecordError>,
}

/// Reads a prediction file.
///
/// With `fail_fast` the first bad record aborts with [`Error::Record`];
/// otherwise bad records are collected in [`ParsedRecords::errors`].
pub fn parse_records(path: &Path, format: InputFormat, fail_fast: bool) -> Result<ParsedRecords> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_records_from(BufReader::new(file), format, fail_fast).map_err(|e| match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn parse_records_from<R: Read>(reader: R, format: InputFormat, fail_fast: bool) -> Result<ParsedRecords> {
    let mut out = ParsedRecords::default();
    let mut push = |line: usize, rec: Result<PredictionRecord>| -> Result<()> {
        match rec {
            Ok(r) => out.records.push(r),
            Err(e) => {
                let message = match e {
                    Error::InvalidInput(m) => m,
                    other => other.to_string(),
                };
                if fail_fast {
                    return Err(Error::Record { line, message });
                }
                out.errors.push(RecordError { line, message });
            }
        }
        Ok(())
    };
    match format {
        InputFormat::Jsonl => {
            for (idx, line) in BufReader::new(reader).lines().enumerate() {
                let line = line.map_err(|source| Error::Io {
                    path: Default::default(),
                    source,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                push(idx + 1, parse_json_line(&line))?;
            }
        }
        InputFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(reader);
            let header = rdr
                .headers()
                .map_err(|e| Error::invalid(format!("unreadable CSV header: {e}")))?
                .clone();
            let layout = CsvLayout::from_header(&header)?;
            for row in rdr.records() {
                match row {
                    Ok(row) => {
                        let line = row.position().map_or(0, |p| p.line() as usize);
                        push(line, layout.parse_row(&row))?;
                    }
                    Err(e) => {
                        let line = e.position().map_or(0, |p| p.line() as usize);
                        push(line, Err(Error::invalid(e.to_string())))?;
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
struct JsonRecord {
    id: String,
    probs: Option<Vec<f64>>,
    logits: Option<Vec<f64>>,
    label: Option<usize>,
}

fn parse_json_line(line: &str) -> Result<PredictionRecord> {
    let raw: JsonRecord =
        serde_json::from_str(line).map_err(|e| Error::invalid(format!("malformed JSON: {e}")))?;
    match (raw.probs, raw.logits) {
        (Some(v), None) => PredictionRecord::new(raw.id, RecordKind::Probs, v, raw.label),
        (None, Some(v)) => PredictionRecord::new(raw.id, RecordKind::Logits, v, raw.label),
        _ => Err(Error::invalid(format!(
            "record {:?} must have exactly one of \"probs\" or \"logits\"",
            raw.id
        ))),
    }
}

struct CsvLayout {
    values: Vec<usize>,
    label: Option<usize>,
}

impl CsvLayout {
    fn from_header(header: &csv::StringRecord) -> Result<Self> {
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < 4 || cols[0] != "id" || cols[1] != "kind" {
            return Err(Error::invalid(
                "CSV header must be id,kind,v1..vN[,label] with N >= 2",
            ));
        }
        let label = cols.iter().position(|&c| c == "label");
        let values = (2..cols.len()).filter(|&i| Some(i) != label).collect();
        Ok(Self { values, label })
    }

    fn parse_row(&self, row: &csv::StringRecord) -> Result<PredictionRecord> {
        let cell = |i: usize| row.get(i).unwrap_or("");
        if row.len() < 2 {
            return Err(Error::invalid("row is missing id or kind"));
        }
        let kind: RecordKind = cell(1).parse()?;
        let values = self
            .values
            .iter()
            .map(|&i| {
                let c = cell(i);
                c.parse::<f64>()
                    .map_err(|_| Error::invalid(format!("column {} is not a number: {c:?}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        let label = match self.label.map(cell) {
            None | Some("") => None,
            Some(c) => Some(
                c.parse::<usize>()
                    .map_err(|_| Error::invalid(format!("label is not a class index: {c:?}")))?,
            ),
        };
        PredictionRecord::new(cell(0), kind, values, label)
    }
}

/// Every score for one record. Logit records are scored on `softmax(y)`
/// with the logit argmax, plus the raw (logit-margin) fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub id: String,
    pub kind: RecordKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    pub argmax_index: usize,
    pub certainty: Vec<f64>,
    pub doubt: Vec<Ext>,
    pub neg_log_certainty: Vec<Ext>,
    pub max_doubt: Ext,
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_certainty: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_doubt: Option<Vec<Ext>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_theta: Option<f64>,
}

pub fn score_record(rec: &PredictionRecord) -> Result<ScoreReport> {
    let (probs, j, raw) = match rec.kind {
        RecordKind::Probs => {
            let p = ProbabilityVector::new(rec.values.clone())?;
            let j = p.argmax();
            (p, j, None)
        }
        RecordKind::Logits => {
            let y = LogitVector::new(rec.values.clone())?;
            let j = y.argmax();
            (y.softmax(), j, Some(y))
        }
    };
    let (raw_certainty, raw_doubt, raw_theta) = match raw {
        Some(y) => (
            Some(raw_certainty_at(&y, j)?.scores),
            Some(raw_doubt_at(&y, j)?.scores),
            Some(raw_doubt_cost_at(&y, j)?.theta),
        ),
        None => (None, None, None),
    };
    Ok(ScoreReport {
        id: rec.id.clone(),
        kind: rec.kind,
        label: rec.label,
        argmax_index: j,
        certainty: pairwise_certainty_at(&probs, j)?.scores,
        doubt: pairwise_doubt_at(&probs, j)?.scores,
        neg_log_certainty: neg_log_certainty_at(&probs, j)?.scores,
        max_doubt: max_doubt_score(&probs)?,
        theta: doubt_cost_at(&probs, j)?.theta,
        raw_certainty,
        raw_doubt,
        raw_theta,
    })
}

/// Scores records in parallel; output order is input order.
///
/// `threads = None` uses rayon's global pool.
pub fn score_batch(records: &[PredictionRecord], threads: Option<usize>) -> Result<Vec<ScoreReport>> {
    let run = || records.par_iter().map(score_record).collect::<Result<Vec<_>>>();
    match threads {
        None => run(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?
            .install(run),
    }
}

pub fn write_reports<W: Write>(mut out: W, reports: &[ScoreReport]) -> std::io::Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_reports(path: &Path) -> Result<Vec<ScoreReport>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reports = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| Error::Record {
            line: idx + 1,
            message: format!("malformed report: {e}"),
        })?;
        reports.push(r);
    }
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistogramField {
    /// Doubt cost on probabilities.
    Theta,
    MaxDoubt,
    /// Largest off-argmax `-ln χ_i`, i.e. `-ln` of the smallest margin.
    NegLog,
}

impl HistogramField {
    pub fn value(self, r: &ScoreReport) -> Ext {
        match self {
            HistogramField::Theta => ExtendedReal::Finite(r.theta),
            HistogramField::MaxDoubt => r.max_doubt,
            HistogramField::NegLog => r
                .neg_log_certainty
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != r.argmax_index)
                .map(|(_, &v)| v)
                .fold(ExtendedReal::Finite(f64::NEG_INFINITY), ExtendedReal::max),
        }
    }
}

impl FromStr for HistogramField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta" => Ok(HistogramField::Theta),
            "max_doubt" => Ok(HistogramField::MaxDoubt),
            "neg_log" => Ok(HistogramField::NegLog),
            other => Err(Error::invalid(format!(
                "unknown field {other:?}, expected theta, max_doubt or neg_log"
            ))),
        }
    }
}

/// Equal-width histogram over the finite values, with infinite values
/// counted apart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub infinite_count: usize,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.infinite_count
    }

    /// `bin_lo,bin_hi,count` rows followed by `inf,,count`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", self.bin_edges[k], self.bin_edges[k + 1], c);
        }
        let _ = writeln!(s, "inf,,{}", self.infinite_count);
        s
    }
}

/// Bins the chosen field. The last bin is closed on the right. If every
/// finite value is equal there is a single zero-width bin; if none is finite
/// there are no bins.
pub fn doubt_histogram(reports: &[ScoreReport], field: HistogramField, bins: usize) -> Result<Histogram> {
    if reports.is_empty() {
        return Err(Error::invalid("histogram of an empty batch"));
    }
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    let mut finite = Vec::with_capacity(reports.len());
    let mut infinite_count = 0;
    for r in reports {
        match field.value(r) {
            ExtendedReal::Finite(v) => finite.push(v),
            ExtendedReal::Infinity => infinite_count += 1,
        }
    }
    if finite.is_empty() {
        return Ok(Histogram {
            bin_edges: Vec::new(),
            counts: Vec::new(),
            infinite_count,
        });
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(Histogram {
            bin_edges: vec![lo, hi],
            counts: vec![finite.len()],
            infinite_count,
        });
    }
    let width = (hi - lo) / bins as f64;
    let mut bin_edges: Vec<f64> = (0..bins).map(|k| lo + k as f64 * width).collect();
    bin_edges.push(hi);
    let mut counts = vec![0; bins];
    for v in finite {
        let k = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram {
        bin_edges,
        counts,
        infinite_count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub mean_theta: f64,
    pub median_theta: f64,
    pub infinite_max_doubt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelComparison {
    pub matched: usize,
    pub model_a: ModelSummary,
    pub model_b: ModelSummary,
    /// Share of matched ids where A's theta is below B's; ties count half.
    pub a_lower_theta_fraction: f64,
    pub missing_in_a: Vec<String>,
    pub missing_in_b: Vec<String>,
}

fn summarize(reports: &[&ScoreReport]) -> ModelSummary {
    let mut thetas: Vec<f64> = reports.iter().map(|r| r.theta).collect();
    thetas.sort_by(f64::total_cmp);
    let n = thetas.len();
    let mean = thetas.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        thetas[n / 2]
    } else {
        0.5 * (thetas[n / 2 - 1] + thetas[n / 2])
    };
    ModelSummary {
        mean_theta: mean,
        median_theta: median,
        infinite_max_doubt: reports.iter().filter(|r| r.max_doubt.is_infinite()).count(),
    }
}

fn index_by_id(reports: &[ScoreReport], which: &str) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::with_capacity(reports.len());
    for (i, r) in reports.iter().enumerate() {
        if map.insert(r.id.clone(), i).is_some() {
            return Err(Error::invalid(format!(
                "duplicate id {:?} in model {which}",
                r.id
            )));
        }
    }
    Ok(map)
}

/// Compares two scored runs over the ids they share.
pub fn compare_models(reports_a: &[ScoreReport], reports_b: &[ScoreReport]) -> Result<ModelComparison> {
    let ids_a = index_by_id(reports_a, "A")?;
    let ids_b = index_by_id(reports_b, "B")?;
    let mut pairs = Vec::new();
    let mut missing_in_b = Vec::new();
    for r in reports_a {
        match ids_b.get(&r.id) {
            Some(&k) => pairs.push((r, &reports_b[k])),
            None => missing_in_b.push(r.id.clone()),
        }
    }
    let missing_in_a: Vec<String> = reports_b
        .iter()
        .filter(|r| !ids_a.contains_key(&r.id))
        .map(|r| r.id.clone())
        .collect();
    if pairs.is_empty() {
        return Err(Error::invalid("the two models share no ids"));
    }
    let wins: f64 = pairs
        .iter()
        .map(|(a, b)| {
            if a.theta < b.theta {
                1.0
            } else if a.theta == b.theta {
                0.5
            } else {
                0.0
            }
        })
        .sum();
    let a: Vec<&ScoreReport> = pairs.iter().map(|(a, _)| *a).collect();
    let b: Vec<&ScoreReport> = pairs.iter().map(|(_, b)| *b).collect();
    Ok(ModelComparison {
        matched: pairs.len(),
        model_a: summarize(&a),
        model_b: summarize(&b),
        a_lower_theta_fraction: wins / pairs.len() as f64,
        missing_in_a,
        missing_in_b,
    })
}
