//! In-context example selection: top-decile actives clustered by PAM
//! k-medoids on Tanimoto distance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::CanonicalSmiles;
use crate::fingerprint::{default_fingerprint, tanimoto};
use crate::refset::{ActivityRecord, Target};

/// Activity at or above which an oracle-scored record counts as active.
pub const ACTIVE_THRESHOLD: f64 = 0.5;
/// Fraction defining the top decile.
pub const POOL_QUANTILE: f64 = 0.9;

const IMPROVEMENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IclError {
    #[error("no active records to select from")]
    EmptyPool,
    #[error("percentile domain error: {0}")]
    Domain(String),
}

/// Nearest-rank percentile: the `ceil(q * n)`-th smallest value.
pub fn percentile_threshold(values: &[f64], q: f64) -> Result<f64, IclError> {
    if values.is_empty() {
        return Err(IclError::Domain("empty value list".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(IclError::Domain(format!("quantile {q} outside (0, 1)")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(IclError::Domain("non-finite value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let exact = q * n as f64;
    // 0.9 * 10 is 9.000000000000002 in binary; treat it as 9
    let rank = if (exact - exact.round()).abs() < 1e-9 {
        exact.round()
    } else {
        exact.ceil()
    } as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

/// Records counted as active: the 0/1 label when every activity is 0 or 1,
/// otherwise activity >= [`ACTIVE_THRESHOLD`].
pub fn actives(records: &[ActivityRecord]) -> Vec<&ActivityRecord> {
    let binary = records
        .iter()
        .all(|r| r.activity == 0.0 || r.activity == 1.0);
    records
        .iter()
        .filter(|r| {
            if binary {
                r.activity == 1.0
            } else {
                r.activity >= ACTIVE_THRESHOLD
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PamResult {
    /// Medoid indices in selection order; cluster `c` has medoid `medoids[c]`.
    pub medoids: Vec<usize>,
    pub assignment: Vec<usize>,
    pub objective: f64,
    /// Objective after BUILD and after each accepted swap.
    pub trace: Vec<f64>,
}

fn assign(dist: &[Vec<f64>], medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut total = 0.0;
    let assignment = (0..dist.len())
        .map(|j| {
            let mut best = 0;
            for (c, &m) in medoids.iter().enumerate() {
                if dist[j][m] < dist[j][medoids[best]] {
                    best = c;
                }
            }
            total += dist[j][medoids[best]];
            best
        })
        .collect();
    (assignment, total)
}

fn objective(dist: &[Vec<f64>], medoids: &[usize]) -> f64 {
    (0..dist.len())
        .map(|j| {
            medoids
                .iter()
                .map(|&m| dist[j][m])
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// PAM k-medoids on a symmetric distance matrix.
///
/// BUILD adds medoids greedily while doing so strictly lowers the
/// objective, so fewer than `k` clusters come back when points coincide.
/// SWAP then applies the best strictly improving (medoid, non-medoid)
/// exchange until none is left. Ties go to the lowest index.
pub fn pam(dist: &[Vec<f64>], k: usize) -> PamResult {
    let n = dist.len();
    if n == 0 || k == 0 {
        return PamResult {
            medoids: vec![],
            assignment: vec![0; n],
            objective: 0.0,
            trace: vec![],
        };
    }
    let k = k.min(n);

    let first = (0..n).map(|c| (c, dist[c].iter().sum::<f64>())).fold(
        (0, f64::INFINITY),
        |best, (c, s)| if s < best.1 { (c, s) } else { best },
    );
    let mut medoids = vec![first.0];
    let mut nearest: Vec<f64> = (0..n).map(|j| dist[j][first.0]).collect();
    while medoids.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for c in (0..n).filter(|c| !medoids.contains(c)) {
            let gain: f64 = (0..n).map(|j| (nearest[j] - dist[j][c]).max(0.0)).sum();
            if gain > IMPROVEMENT_EPS && best.is_none_or(|(_, g)| gain > g) {
                best = Some((c, gain));
            }
        }
        let Some((c, _)) = best else { break };
        medoids.push(c);
        for j in 0..n {
            nearest[j] = nearest[j].min(dist[j][c]);
        }
    }

    let mut current = objective(dist, &medoids);
    let mut trace = vec![current];
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for slot in 0..medoids.len() {
            for h in (0..n).filter(|h| !medoids.contains(h)) {
                let mut trial = medoids.clone();
                trial[slot] = h;
                let value = objective(dist, &trial);
                if value < current - IMPROVEMENT_EPS && best.is_none_or(|(_, _, v)| value < v) {
                    best = Some((slot, h, value));
                }
            }
        }
        let Some((slot, h, value)) = best else { break };
        medoids[slot] = h;
        current = value;
        trace.push(current);
    }
    let (assignment, total) = assign(dist, &medoids);
    PamResult {
        medoids,
        assignment,
        objective: total,
        trace,
    }
}

/// True when no single (medoid, non-medoid) swap lowers the objective by
/// more than `eps`.
pub fn is_swap_local_optimum(dist: &[Vec<f64>], medoids: &[usize], eps: f64) -> bool {
    let base = objective(dist, medoids);
    for slot in 0..medoids.len() {
        for h in (0..dist.len()).filter(|h| !medoids.contains(h)) {
            let mut trial = medoids.to_vec();
            trial[slot] = h;
            if objective(dist, &trial) < base - eps {
                return false;
            }
        }
    }
    true
}

/// Objective of a given medoid set (sum of nearest-medoid distances).
pub fn medoid_objective(dist: &[Vec<f64>], medoids: &[usize]) -> f64 {
    objective(dist, medoids)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IclExample {
    pub smiles: CanonicalSmiles,
    pub activity: f64,
    pub cluster: usize,
    pub cluster_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IclSelection {
    pub target: Option<Target>,
    pub active_count: usize,
    pub threshold: f64,
    pub pool_size: usize,
    pub k: usize,
    /// Sorted by descending activity; `cluster` indexes this list.
    pub medoids: Vec<IclExample>,
    pub pool: Vec<CanonicalSmiles>,
    pub cluster_assignment: Vec<usize>,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
}

impl IclSelection {
    pub fn examples(&self) -> Vec<CanonicalSmiles> {
        self.medoids.iter().map(|m| m.smiles.clone()).collect()
    }
}

/// Tanimoto distance matrix over canonical molecules.
pub fn distance_matrix(molecules: &[CanonicalSmiles]) -> Vec<Vec<f64>> {
    let fps: Vec<_> = molecules
        .iter()
        .map(|m| default_fingerprint(&m.parse().expect("canonical SMILES parses")))
        .collect();
    let n = fps.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = 1.0 - tanimoto(&fps[i], &fps[j]).expect("same width");
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Picks up to `k` diverse, highly active examples.
pub fn select_icl(records: &[ActivityRecord], k: usize) -> Result<IclSelection, IclError> {
    let active = actives(records);
    if active.is_empty() {
        return Err(IclError::EmptyPool);
    }
    let values: Vec<f64> = active.iter().map(|r| r.activity).collect();
    let threshold = percentile_threshold(&values, POOL_QUANTILE)?;
    let pool: Vec<&ActivityRecord> = active
        .iter()
        .copied()
        .filter(|r| r.activity >= threshold)
        .collect();
    let smiles: Vec<CanonicalSmiles> = pool.iter().map(|r| r.smiles.clone()).collect();
    let dist = distance_matrix(&smiles);
    let result = pam(&dist, k);

    let mut order: Vec<usize> = (0..result.medoids.len()).collect();
    order.sort_by(|&a, &b| {
        pool[result.medoids[b]]
            .activity
            .total_cmp(&pool[result.medoids[a]].activity)
            .then(a.cmp(&b))
    });
    // old cluster id -> position in the sorted medoid list
    let mut renumber = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        renumber[old] = new;
    }
    let assignment: Vec<usize> = result.assignment.iter().map(|&c| renumber[c]).collect();
    let medoids = order
        .iter()
        .enumerate()
        .map(|(new, &old)| {
            let r = pool[result.medoids[old]];
            IclExample {
                smiles: r.smiles.clone(),
                activity: r.activity,
                cluster: new,
                cluster_size: assignment.iter().filter(|&&c| c == new).count(),
            }
        })
        .collect();
    Ok(IclSelection {
        target: records.first().map(|r| r.target),
        active_count: active.len(),
        threshold,
        pool_size: pool.len(),
        k: k.min(pool.len()),
        medoids,
        pool: smiles,
        cluster_assignment: assignment,
        objective: result.objective,
        objective_trace: result.trace,
    })
}
