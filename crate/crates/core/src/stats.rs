//! Correlations, Gaussian fits and tabulations used to analyse runs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::metrics::{format_3dp, MetricReport, MetricSummary, BASE_METRICS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("empty input")]
    EmptyInput,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::InsufficientData(format!(
            "{} points, need at least 2",
            x.len()
        )));
    }
    Ok(())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Product-moment correlation; `None` when either variance is zero.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>, StatsError> {
    check_pair(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Rank correlation: Pearson over average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>, StatsError> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Two-sided p-value of a Pearson `r` over `n` points from the t
/// approximation `t = r sqrt((n-2)/(1-r^2))` with n-2 degrees of freedom.
pub fn pearson_p_value(r: f64, n: usize) -> Option<f64> {
    if n < 3 || !r.is_finite() {
        return None;
    }
    if r.abs() >= 1.0 {
        return Some(0.0);
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some((2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    /// Row-major; `None` where a variance is zero.
    pub pearson: Vec<Vec<Option<f64>>>,
    /// Rows used after listwise deletion.
    pub n: usize,
    /// Rows dropped for containing a null.
    pub dropped: usize,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        self.pearson[i][j]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric");
        for l in &self.labels {
            let _ = write!(out, ",{l}");
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.pearson) {
            out.push_str(l);
            for v in row {
                match v {
                    Some(v) => {
                        let _ = write!(out, ",{v:.3}");
                    }
                    None => out.push_str(",NA"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Pearson matrix over columns of `rows`, dropping any row with a null.
pub fn correlation_matrix(
    labels: &[&str],
    rows: &[Vec<Option<f64>>],
) -> Result<CorrelationMatrix, StatsError> {
    let complete: Vec<Vec<f64>> = rows
        .iter()
        .filter_map(|r| {
            if r.len() != labels.len() {
                return None;
            }
            r.iter().copied().collect::<Option<Vec<f64>>>()
        })
        .collect();
    if complete.len() < 3 {
        return Err(StatsError::InsufficientData(format!(
            "{} complete rows, need at least 3",
            complete.len()
        )));
    }
    let columns: Vec<Vec<f64>> = (0..labels.len())
        .map(|c| complete.iter().map(|r| r[c]).collect())
        .collect();
    let k = labels.len();
    let mut m = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let r = if i == j {
                pearson(&columns[i], &columns[i])?.map(|_| 1.0)
            } else {
                pearson(&columns[i], &columns[j])?
            };
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        labels: labels.iter().map(|s| s.to_string()).collect(),
        pearson: m,
        n: complete.len(),
        dropped: rows.len() - complete.len(),
    })
}

/// 5x5 matrix over validity, success rate, novelty, uniqueness, diversity.
pub fn metric_correlations(reports: &[MetricReport]) -> Result<CorrelationMatrix, StatsError> {
    let rows: Vec<Vec<Option<f64>>> = reports
        .iter()
        .map(|r| BASE_METRICS.iter().map(|m| r.get(m)).collect())
        .collect();
    correlation_matrix(&BASE_METRICS, &rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mu: f64,
    /// Population standard deviation (n denominator).
    pub sigma: f64,
    pub n: usize,
}

impl GaussianFit {
    pub fn density(&self, x: f64) -> f64 {
        if self.sigma == 0.0 {
            return if x == self.mu { f64::INFINITY } else { 0.0 };
        }
        let z = (x - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * std::f64::consts::PI).sqrt())
    }
}

pub fn gaussian_fit(values: &[f64]) -> Result<GaussianFit, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mu = mean(values);
    let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / values.len() as f64;
    Ok(GaussianFit {
        mu,
        sigma: var.sqrt(),
        n: values.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// count / (n * width)
    pub density: f64,
}

/// Equal-width histogram over `[lo, hi]`; values outside are ignored and
/// `hi` itself falls in the last bin.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<HistogramBin> {
    let bins = bins.max(1);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        if v < lo || v > hi || !v.is_finite() {
            continue;
        }
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = values.len().max(1) as f64;
    counts
        .iter()
        .enumerate()
        .map(|(i, &count)| HistogramBin {
            lo: lo + i as f64 * width,
            hi: lo + (i + 1) as f64 * width,
            count,
            density: count as f64 / (n * width),
        })
        .collect()
}

/// Association between numeric targets and measured values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetAssociation {
    pub n: usize,
    pub pearson: Option<f64>,
    /// Two-sided t-approximation p-value for `pearson`.
    pub pearson_p: Option<f64>,
    pub spearman: Option<f64>,
    /// Gaussian fit of measured values per target, targets ascending.
    pub fits: Vec<(f64, GaussianFit)>,
}

/// Pearson/Spearman of (target, measured) pairs plus per-target fits.
pub fn target_association(pairs: &[(f64, f64)]) -> Result<TargetAssociation, StatsError> {
    let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let r = pearson(&x, &y)?;
    let mut targets = x.clone();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let fits = targets
        .iter()
        .map(|&t| {
            let vals: Vec<f64> = pairs.iter().filter(|p| p.0 == t).map(|p| p.1).collect();
            gaussian_fit(&vals).map(|f| (t, f))
        })
        .collect::<Result<_, _>>()?;
    Ok(TargetAssociation {
        n: pairs.len(),
        pearson: r,
        pearson_p: r.and_then(|r| pearson_p_value(r, pairs.len())),
        spearman: spearman(&x, &y)?,
        fits,
    })
}

/// CSV of per-target histograms with the fitted density at each bin centre.
pub fn histogram_csv(
    pairs: &[(f64, f64)],
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<String, StatsError> {
    let assoc = target_association(pairs)?;
    let mut out = String::from("target,bin_lo,bin_hi,count,density,fit_mu,fit_sigma,fit_density\n");
    for (t, fit) in &assoc.fits {
        let vals: Vec<f64> = pairs.iter().filter(|p| p.0 == *t).map(|p| p.1).collect();
        for b in histogram(&vals, lo, hi, bins) {
            let centre = (b.lo + b.hi) / 2.0;
            let _ = writeln!(
                out,
                "{t},{:.4},{:.4},{},{:.6},{:.6},{:.6},{:.6}",
                b.lo,
                b.hi,
                b.count,
                b.density,
                fit.mu,
                fit.sigma,
                fit.density(centre)
            );
        }
    }
    Ok(out)
}

/// One row of a temperature sweep: summaries of each metric at one temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub temperature: f64,
    pub metrics: Vec<(String, MetricSummary)>,
}

/// Groups reports by temperature (ascending) and summarises each metric.
pub fn temperature_sweep(entries: &[(f64, MetricReport)]) -> Vec<SweepRow> {
    let mut temps: Vec<f64> = entries.iter().map(|e| e.0).collect();
    temps.sort_by(f64::total_cmp);
    temps.dedup();
    temps
        .into_iter()
        .map(|t| {
            let reports: Vec<MetricReport> =
                entries.iter().filter(|e| e.0 == t).map(|e| e.1).collect();
            SweepRow {
                temperature: t,
                metrics: crate::metrics::aggregate_runs(&reports)
                    .into_iter()
                    .map(|(name, s)| (name.to_string(), s))
                    .collect(),
            }
        })
        .collect()
}

/// CSV of a sweep with `mean (std)` cells.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("temperature");
    if let Some(first) = rows.first() {
        for (name, _) in &first.metrics {
            let _ = write!(out, ",{name}");
        }
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format_3dp(row.temperature));
        for (_, s) in &row.metrics {
            let _ = write!(out, ",{}", s.cell());
        }
        out.push('\n');
    }
    out
}
