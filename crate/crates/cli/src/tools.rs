//! Line-oriented developer commands and the analysis subcommands.

use std::fs;
use std::path::Path;

use molcreativity::chem::{canonicalize, parse_smiles, validate};
use molcreativity::fingerprint::default_fingerprint;
use molcreativity::icl::{select_icl, IclSelection};
use molcreativity::metrics::BASE_METRICS;
use molcreativity::refset::{load_activity, Target};
use molcreativity::stats::{
    correlation_matrix, histogram_csv, target_association, CorrelationMatrix, TargetAssociation,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::eval::{load_run_records, TaskReport};

/// One output line per input; the flag marks success.
pub type LineResult = (String, bool);

pub fn validate_line(input: &str) -> LineResult {
    match parse_smiles(input.trim()) {
        Err(e) => (format!("error: {e}"), false),
        Ok(mol) => {
            let verdict = validate(&mol);
            (verdict.to_string(), verdict.is_valid())
        }
    }
}

pub fn canon_line(input: &str) -> LineResult {
    match parse_smiles(input.trim()) {
        Err(e) => (format!("error: {e}"), false),
        Ok(mol) => match validate(&mol) {
            v if v.is_valid() => (canonicalize(&mol).into_string(), true),
            v => (format!("error: {v}"), false),
        },
    }
}

pub fn fp_line(input: &str) -> LineResult {
    match parse_smiles(input.trim()) {
        Err(e) => (format!("error: {e}"), false),
        Ok(mol) => (default_fingerprint(&mol).to_hex(), true),
    }
}

/// Applies `f` to every input, returning the output lines and whether any
/// line succeeded.
pub fn run_lines(inputs: &[String], f: fn(&str) -> LineResult) -> (Vec<String>, bool) {
    let mut any = false;
    let lines = inputs
        .iter()
        .map(|i| {
            let (line, ok) = f(i);
            any |= ok;
            line
        })
        .collect();
    (lines, any)
}

pub fn cmd_select_icl(records: &Path, target: &str, k: usize) -> Result<IclSelection, CliError> {
    let target: Target = target
        .parse()
        .map_err(|e: molcreativity::refset::UnknownTarget| CliError::Config(e.to_string()))?;
    let load = load_activity(records, target)?;
    if load.warnings > 0 {
        log::warn!("{} unparsable lines skipped", load.warnings);
    }
    Ok(select_icl(&load.records, k)?)
}

fn read_report(path: &Path) -> Result<TaskReport, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Report files named on the command line; directories contribute their
/// `reports/*.json` (or `*.json`) in name order.
fn report_files(paths: &[std::path::PathBuf]) -> Result<Vec<std::path::PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let dir = if p.join("reports").is_dir() {
                p.join("reports")
            } else {
                p.clone()
            };
            let mut files: Vec<_> = fs::read_dir(&dir)
                .map_err(|e| CliError::io(&dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|e| e == "json"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Which rows feed the correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrRows {
    /// One row per task: the run means.
    TaskMeans,
    /// One row per run.
    Runs,
}

/// Correlations of the five base metrics over report files.
pub fn cmd_corr_reports(
    paths: &[std::path::PathBuf],
    rows: CorrRows,
) -> Result<CorrelationMatrix, CliError> {
    let mut data = Vec::new();
    for f in report_files(paths)? {
        let report = read_report(&f)?;
        match rows {
            CorrRows::TaskMeans => data.push(
                BASE_METRICS
                    .iter()
                    .map(|m| {
                        report
                            .summary
                            .iter()
                            .find(|s| s.metric == *m)
                            .and_then(|s| s.mean)
                    })
                    .collect(),
            ),
            CorrRows::Runs => data.extend(
                report
                    .runs
                    .iter()
                    .map(|r| BASE_METRICS.iter().map(|m| r.report.get(m)).collect()),
            ),
        }
    }
    Ok(correlation_matrix(&BASE_METRICS, &data)?)
}

/// Correlations over a CSV whose header names metric columns; other
/// columns are ignored and empty or `NA` cells are null.
pub fn cmd_corr_csv(path: &Path) -> Result<CorrelationMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::Data(format!("{}: empty", path.display())))?
        .split(',')
        .map(str::trim)
        .collect();
    let columns: Vec<(usize, &str)> = BASE_METRICS
        .iter()
        .filter_map(|m| header.iter().position(|h| h == m).map(|i| (i, *m)))
        .collect();
    if columns.len() < 2 {
        return Err(CliError::Data(format!(
            "{}: fewer than two metric columns",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let row = columns
            .iter()
            .map(|&(i, _)| match fields.get(i) {
                None | Some(&"") | Some(&"NA") => Ok(None),
                Some(v) => v.parse::<f64>().map(Some).map_err(|_| {
                    CliError::Data(format!(
                        "{}: row {}: bad number {v:?}",
                        path.display(),
                        n + 2
                    ))
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let labels: Vec<&str> = columns.iter().map(|&(_, m)| m).collect();
    Ok(correlation_matrix(&labels, &rows)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogpAnalysis {
    pub property: String,
    pub association: TargetAssociation,
    pub histogram_csv: String,
}

/// Target-vs-score association over the valid items of every run record
/// under `dirs` whose task has a numeric target.
pub fn cmd_logp(
    dirs: &[std::path::PathBuf],
    property: &str,
    bins: usize,
) -> Result<LogpAnalysis, CliError> {
    let mut pairs = Vec::new();
    for dir in dirs {
        for record in load_run_records(dir)? {
            let Some(target) = record.numeric_target else {
                continue;
            };
            for item in &record.batch.items {
                if let Some(Some(score)) = item.scores.get(property) {
                    if item.is_valid() {
                        pairs.push((target, *score));
                    }
                }
            }
        }
    }
    let association = target_association(&pairs)?;
    let (lo, hi) = pairs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, s)| {
            (lo.min(s), hi.max(s))
        });
    let histogram_csv = histogram_csv(&pairs, lo.floor(), hi.ceil().max(lo.floor() + 1.0), bins)?;
    Ok(LogpAnalysis {
        property: property.to_string(),
        association,
        histogram_csv,
    })
}
