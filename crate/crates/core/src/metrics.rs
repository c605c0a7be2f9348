//! Convergent, divergent, composite and elite creativity metrics.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::{canonicalize, parse_smiles, validate, CanonicalSmiles};
use crate::fingerprint::{default_fingerprint, tanimoto, Fingerprint};
use crate::refset::ReferenceIndex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("geometric mean of an empty list")]
    EmptyInput,
    #[error("geometric mean input {0} outside [0, 1]")]
    OutOfDomain(f64),
}

/// `(x_1 * ... * x_n)^(1/n)`; exactly 0 when any input is 0.
pub fn geometric_mean(xs: &[f64]) -> Result<f64, MetricsError> {
    if xs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if let Some(&bad) = xs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(MetricsError::OutOfDomain(bad));
    }
    if xs.contains(&0.0) {
        return Ok(0.0);
    }
    let product: f64 = xs.iter().product();
    Ok(product.powf(1.0 / xs.len() as f64))
}

/// GM over optional inputs: null if any input is null.
pub fn composite(xs: &[Option<f64>]) -> Option<f64> {
    let values: Option<Vec<f64>> = xs.iter().copied().collect();
    geometric_mean(&values?).ok()
}

/// A valid molecule with what the metrics need from it.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidMolecule {
    pub canonical: CanonicalSmiles,
    pub fingerprint: Fingerprint,
}

impl ValidMolecule {
    /// Parses and validates; `None` when the string is not a valid molecule.
    pub fn from_smiles(text: &str) -> Option<ValidMolecule> {
        let mol = parse_smiles(text).ok()?;
        if !validate(&mol).is_valid() {
            return None;
        }
        Some(ValidMolecule {
            canonical: canonicalize(&mol),
            fingerprint: default_fingerprint(&mol),
        })
    }
}

/// One generated output as seen by the metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredItem {
    /// `None` for empty extractions, parse failures and invalid molecules.
    pub molecule: Option<ValidMolecule>,
    /// All task constraints satisfied. Ignored for invalid items.
    pub constraints_met: bool,
}

impl ScoredItem {
    pub fn is_successful(&self) -> bool {
        self.molecule.is_some() && self.constraints_met
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricCounts {
    pub G: usize,
    pub V: usize,
    pub S: usize,
    pub N: usize,
    pub U: usize,
    pub E: usize,
    /// Valid molecules entering the diversity sum; equals `V`.
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub validity: Option<f64>,
    pub success_rate: Option<f64>,
    pub novelty: Option<f64>,
    pub uniqueness: Option<f64>,
    pub diversity: Option<f64>,
    pub convergent: Option<f64>,
    pub divergent: Option<f64>,
    pub overall: Option<f64>,
    pub fully_creative: Option<f64>,
}

/// Metric names in report order.
pub const METRIC_NAMES: [&str; 9] = [
    "validity",
    "success_rate",
    "novelty",
    "uniqueness",
    "diversity",
    "convergent",
    "divergent",
    "overall",
    "fully_creative",
];

/// The five base metrics used for correlation analysis.
pub const BASE_METRICS: [&str; 5] = [
    "validity",
    "success_rate",
    "novelty",
    "uniqueness",
    "diversity",
];

impl MetricReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "validity" => self.validity,
            "success_rate" => self.success_rate,
            "novelty" => self.novelty,
            "uniqueness" => self.uniqueness,
            "diversity" => self.diversity,
            "convergent" => self.convergent,
            "divergent" => self.divergent,
            "overall" => self.overall,
            "fully_creative" => self.fully_creative,
            _ => None,
        }
    }

    /// Fills composites from the five base metrics.
    pub fn from_base(
        validity: Option<f64>,
        success_rate: Option<f64>,
        novelty: Option<f64>,
        uniqueness: Option<f64>,
        diversity: Option<f64>,
        fully_creative: Option<f64>,
    ) -> MetricReport {
        let convergent = composite(&[validity, success_rate]);
        let divergent = composite(&[novelty, uniqueness, diversity]);
        MetricReport {
            validity,
            success_rate,
            novelty,
            uniqueness,
            diversity,
            convergent,
            divergent,
            overall: composite(&[convergent, divergent]),
            fully_creative,
        }
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Mean pairwise Tanimoto similarity subtracted from 1, over every pair
/// `i < j` in index order. `None` for fewer than two fingerprints.
pub fn diversity(fps: &[&Fingerprint]) -> Option<f64> {
    let n = fps.len();
    if n < 2 {
        return None;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += tanimoto(fps[i], fps[j]).expect("fingerprints share the default width");
        }
    }
    Some(1.0 - 2.0 / (n as f64 * (n as f64 - 1.0)) * sum)
}

/// Counts and rates for one batch against a reference set.
pub fn compute_metrics(items: &[ScoredItem], idx: &ReferenceIndex) -> (MetricCounts, MetricReport) {
    let g = items.len();
    let valid: Vec<&ValidMolecule> = items.iter().filter_map(|i| i.molecule.as_ref()).collect();
    let v = valid.len();
    let s = items.iter().filter(|i| i.is_successful()).count();
    let n_novel = valid.iter().filter(|m| !idx.contains(&m.canonical)).count();
    let u = valid
        .iter()
        .map(|m| &m.canonical)
        .collect::<HashSet<_>>()
        .len();

    let mut seen = HashSet::new();
    let mut e = 0;
    for item in items {
        if let Some(m) = &item.molecule {
            let first = seen.insert(&m.canonical);
            if first && item.constraints_met && !idx.contains(&m.canonical) {
                e += 1;
            }
        }
    }

    let counts = MetricCounts {
        G: g,
        V: v,
        S: s,
        N: n_novel,
        U: u,
        E: e,
        n: v,
    };
    let fps: Vec<&Fingerprint> = valid.iter().map(|m| &m.fingerprint).collect();
    let report = MetricReport::from_base(
        ratio(v, g),
        ratio(s, g),
        ratio(n_novel, v),
        ratio(u, v),
        diversity(&fps),
        ratio(e, g),
    );
    (counts, report)
}

/// Novelty against each corpus of the index separately (valid items whose
/// canonical form is absent from that corpus, over V).
pub fn novelty_by_corpus(
    items: &[ScoredItem],
    idx: &ReferenceIndex,
) -> BTreeMap<String, Option<f64>> {
    let valid: Vec<&ValidMolecule> = items.iter().filter_map(|i| i.molecule.as_ref()).collect();
    idx.corpora()
        .into_iter()
        .map(|corpus| {
            let novel = valid
                .iter()
                .filter(|m| !idx.source_tags(&m.canonical).any(|t| t == corpus))
                .count();
            (corpus.to_string(), ratio(novel, valid.len()))
        })
        .collect()
}

/// Mean and sample standard deviation of one metric across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// Runs contributing a value.
    pub n: usize,
    /// Runs where the metric was null.
    pub n_null: usize,
}

impl MetricSummary {
    pub fn of(values: &[Option<f64>]) -> MetricSummary {
        let present: Vec<f64> = values.iter().flatten().copied().collect();
        let n = present.len();
        let mean = (n > 0).then(|| present.iter().sum::<f64>() / n as f64);
        let std = mean.map(|m| {
            if n < 2 {
                0.0
            } else {
                (present.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            }
        });
        MetricSummary {
            mean,
            std,
            n,
            n_null: values.len() - n,
        }
    }

    /// Table cell such as `0.82 (0.051)`, or `NA`.
    pub fn cell(&self) -> String {
        match (self.mean, self.std) {
            (Some(m), Some(s)) => format!("{} ({})", format_3dp(m), format_3dp(s)),
            _ => "NA".to_string(),
        }
    }
}

/// Rounds to three decimals and trims trailing zeros, keeping at least one
/// decimal digit: 0.820 -> "0.82", 1.0 -> "1.0", 0.0514 -> "0.051".
pub fn format_3dp(x: f64) -> String {
    let mut s = format!("{x:.3}");
    while s.ends_with('0') && !s.ends_with(".0") {
        s.pop();
    }
    if s == "-0.0" {
        s = "0.0".to_string();
    }
    s
}

/// Per-metric summaries across runs, keyed in [`METRIC_NAMES`] order.
pub fn aggregate_runs(reports: &[MetricReport]) -> Vec<(&'static str, MetricSummary)> {
    METRIC_NAMES
        .iter()
        .map(|&name| {
            let values: Vec<Option<f64>> = reports.iter().map(|r| r.get(name)).collect();
            (name, MetricSummary::of(&values))
        })
        .collect()
}
