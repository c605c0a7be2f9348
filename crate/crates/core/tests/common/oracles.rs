//! Independent reference implementations checked against the library.

#![allow(dead_code)]

use std::collections::HashSet;

use molcreativity::chem::{needs_pi_bond, parse_smiles, BondOrder, Molecule};
use molcreativity::fingerprint::{default_fingerprint, Fingerprint};

/// Counts and rates recomputed by pairwise scans.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteMetrics {
    pub g: usize,
    pub v: usize,
    pub s: usize,
    pub n: usize,
    pub u: usize,
    pub e: usize,
    pub rates: [Option<f64>; 9],
}

fn popcount_and(a: &Fingerprint, b: &Fingerprint) -> (usize, usize) {
    let (mut inter, mut union) = (0, 0);
    for bit in 0..a.width() {
        let (x, y) = (a.get(bit), b.get(bit));
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    (inter, union)
}

/// Tanimoto by scanning every bit.
pub fn tanimoto_bits(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let (inter, union) = popcount_and(a, b);
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

fn gm(xs: &[f64]) -> f64 {
    if xs.contains(&0.0) {
        0.0
    } else {
        xs.iter().product::<f64>().powf(1.0 / xs.len() as f64)
    }
}

fn gm_opt(xs: &[Option<f64>]) -> Option<f64> {
    let v: Option<Vec<f64>> = xs.iter().copied().collect();
    v.map(|v| gm(&v))
}

/// `items` are (canonical string of a valid molecule, constraints met).
pub fn brute_metrics(
    items: &[(Option<String>, bool)],
    reference: &HashSet<String>,
) -> BruteMetrics {
    let g = items.len();
    let mut v = 0;
    let mut s = 0;
    let mut n = 0;
    let mut u = 0;
    let mut e = 0;
    for (i, (m, met)) in items.iter().enumerate() {
        let Some(m) = m else { continue };
        v += 1;
        s += usize::from(*met);
        let novel = !reference.contains(m);
        n += usize::from(novel);
        let first = !items[..i]
            .iter()
            .any(|(o, _)| o.as_deref() == Some(m.as_str()));
        u += usize::from(first);
        e += usize::from(first && *met && novel);
    }
    let fps: Vec<Fingerprint> = items
        .iter()
        .filter_map(|(m, _)| m.as_ref())
        .map(|m| default_fingerprint(&parse_smiles(m).unwrap()))
        .collect();
    let diversity = (fps.len() >= 2).then(|| {
        let k = fps.len();
        let mut sum = 0.0;
        for i in 0..k {
            for j in i + 1..k {
                sum += tanimoto_bits(&fps[i], &fps[j]);
            }
        }
        1.0 - 2.0 / (k as f64 * (k as f64 - 1.0)) * sum
    });
    let rate = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    let (validity, sr, novelty, uniqueness) = (rate(v, g), rate(s, g), rate(n, v), rate(u, v));
    let convergent = gm_opt(&[validity, sr]);
    let divergent = gm_opt(&[novelty, uniqueness, diversity]);
    let overall = gm_opt(&[convergent, divergent]);
    BruteMetrics {
        g,
        v,
        s,
        n,
        u,
        e,
        rates: [
            validity,
            sr,
            novelty,
            uniqueness,
            diversity,
            convergent,
            divergent,
            overall,
            rate(e, g),
        ],
    }
}

/// Exhaustive search for a perfect matching of pi-demanding aromatic atoms
/// along aromatic bonds.
pub fn brute_force_matchable(mol: &Molecule) -> bool {
    let demand: Vec<bool> = (0..mol.atom_count())
        .map(|i| needs_pi_bond(mol, i))
        .collect();
    fn search(mol: &Molecule, demand: &[bool], used: &mut Vec<bool>) -> bool {
        let Some(a) = (0..demand.len()).find(|&i| demand[i] && !used[i]) else {
            return true;
        };
        used[a] = true;
        for &(b, bond) in mol.neighbors(a) {
            if demand[b] && !used[b] && mol.bonds[bond].order == BondOrder::Aromatic {
                used[b] = true;
                if search(mol, demand, used) {
                    return true;
                }
                used[b] = false;
            }
        }
        used[a] = false;
        false
    }
    search(mol, &demand, &mut vec![false; mol.atom_count()])
}

/// Sum of nearest-medoid distances.
pub fn medoid_cost(dist: &[Vec<f64>], medoids: &[usize]) -> f64 {
    (0..dist.len())
        .map(|j| {
            medoids
                .iter()
                .map(|&m| dist[j][m])
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Lowest cost over every medoid set of exactly `k` members.
pub fn exhaustive_optimum(dist: &[Vec<f64>], k: usize) -> f64 {
    fn rec(dist: &[Vec<f64>], k: usize, start: usize, chosen: &mut Vec<usize>, best: &mut f64) {
        if chosen.len() == k {
            *best = best.min(medoid_cost(dist, chosen));
            return;
        }
        for c in start..dist.len() {
            chosen.push(c);
            rec(dist, k, c + 1, chosen, best);
            chosen.pop();
        }
    }
    let mut best = f64::INFINITY;
    rec(dist, k.min(dist.len()), 0, &mut Vec::new(), &mut best);
    best
}

/// Nearest-rank percentile in integer arithmetic: the smallest rank `r`
/// with `r * den >= num * n`, for `q = num / den`.
pub fn nearest_rank(values: &[f64], num: usize, den: usize) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let r = (1..=n).find(|&r| r * den >= num * n).unwrap();
    sorted[r - 1]
}
