//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on
//! any failure. Runs offline with built-in oracles and the mock backend.

#[path = "../../core/tests/common/oracles.rs"]
mod oracles;

use std::collections::{BTreeMap, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use molcreativity::chem::{
    canonicalize, kekulize, parse_smiles, validate, write_smiles, CanonicalSmiles, Molecule,
};
use molcreativity::fingerprint::{default_fingerprint, tanimoto, Fingerprint};
use molcreativity::generation::TaskRegistry;
use molcreativity::icl::{
    distance_matrix, is_swap_local_optimum, pam, percentile_threshold, POOL_QUANTILE,
};
use molcreativity::metrics::{
    composite, compute_metrics, diversity, geometric_mean, ScoredItem, ValidMolecule, METRIC_NAMES,
};
use molcreativity::oracle::check_constraints;
use molcreativity::refset::{load_reference, ReferenceIndex};
use molcreativity::stats::{correlation_matrix, pearson};
use oracles::{
    brute_force_matchable, brute_metrics, exhaustive_optimum, medoid_cost, nearest_rank,
    tanimoto_bits,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let elapsed = start.elapsed();
    ensure(elapsed < limit, || {
        format!("took {elapsed:.2?}, limit {limit:?}")
    })
}

fn druglike() -> Vec<Molecule> {
    let text = std::fs::read_to_string(fixture("druglike.smi")).unwrap();
    text.lines()
        .skip(1)
        .filter_map(|l| l.split('\t').next())
        .map(|s| parse_smiles(s).unwrap_or_else(|e| panic!("fixture {s}: {e}")))
        .collect()
}

fn gm_laws() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for t in 0..10_000 {
        let n = rng.random_range(2..=5);
        let xs: Vec<f64> = if t % 10 == 0 {
            vec![rng.random_range(0.0..=1.0); n]
        } else {
            (0..n).map(|_| rng.random_range(0.0..=1.0)).collect()
        };
        let g = geometric_mean(&xs).map_err(|e| e.to_string())?;
        let am = xs.iter().sum::<f64>() / n as f64;
        ensure(g <= am + 1e-12, || format!("GM {g} > AM {am} for {xs:?}"))?;
        let all_equal = xs.iter().all(|&x| x == xs[0]);
        ensure(((am - g).abs() < 1e-12) == all_equal, || {
            format!("equality case wrong for {xs:?}")
        })?;

        let mut zeroed = xs.clone();
        zeroed[rng.random_range(0..n)] = 0.0;
        ensure(geometric_mean(&zeroed).unwrap() == 0.0, || {
            format!("zero not annihilating for {zeroed:?}")
        })?;

        let positive: Vec<f64> = xs.iter().map(|&x| x.max(1e-3)).collect();
        let alpha = rng.random_range(1e-3..=1.0);
        let i = rng.random_range(0..n);
        let mut scaled = positive.clone();
        scaled[i] *= alpha;
        let ratio = geometric_mean(&scaled).unwrap() / geometric_mean(&positive).unwrap();
        let expected = alpha.powf(1.0 / n as f64);
        ensure((ratio - expected).abs() < 1e-12, || {
            format!("scaling {ratio} vs {expected} for {positive:?}")
        })?;
    }
    within_time(start, Duration::from_secs(1))?;
    Ok("10000 tuples".into())
}

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let pool_smiles = [
        "CCO",
        "c1ccccc1",
        "CC(=O)O",
        "CCN",
        "c1ccncc1",
        "CC(C)O",
        "OC(=O)c1ccccc1O",
        "CCCC",
        "C1CCCCC1",
        "NCC(=O)O",
    ];
    let pool: Vec<ValidMolecule> = pool_smiles
        .iter()
        .map(|s| ValidMolecule::from_smiles(s).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut degenerate = [0usize; 2];
    for b in 0..500 {
        let g = rng.random_range(0..=50);
        // force V = 0 and V = 1 batches regularly
        let forced_valid = match b % 10 {
            0 => Some(0),
            1 => Some(1),
            _ => None,
        };
        let mut choices: Vec<(Option<usize>, bool)> = (0..g)
            .map(|_| {
                (
                    rng.random_bool(0.7)
                        .then(|| rng.random_range(0..pool.len())),
                    rng.random_bool(0.5),
                )
            })
            .collect();
        if let Some(v) = forced_valid {
            for (i, c) in choices.iter_mut().enumerate() {
                c.0 = (i < v).then(|| rng.random_range(0..pool.len()));
            }
            choices.shuffle(&mut rng);
        }
        let in_ref: Vec<bool> = (0..pool.len()).map(|_| rng.random_bool(0.4)).collect();
        let reference: HashSet<String> = (0..pool.len())
            .filter(|&i| in_ref[i])
            .map(|i| pool[i].canonical.as_str().to_string())
            .collect();
        let idx = ReferenceIndex::from_smiles("ref", reference.iter().map(String::as_str));
        let items: Vec<ScoredItem> = choices
            .iter()
            .map(|&(m, met)| ScoredItem {
                molecule: m.map(|i| pool[i].clone()),
                constraints_met: met,
            })
            .collect();
        let (counts, report) = compute_metrics(&items, &idx);
        let brute_items: Vec<(Option<String>, bool)> = choices
            .iter()
            .map(|&(m, met)| (m.map(|i| pool[i].canonical.as_str().to_string()), met))
            .collect();
        let brute = brute_metrics(&brute_items, &reference);
        let got = (counts.G, counts.V, counts.S, counts.N, counts.U, counts.E);
        let want = (brute.g, brute.v, brute.s, brute.n, brute.u, brute.e);
        ensure(got == want, || {
            format!("batch {b}: counts {got:?} vs {want:?}")
        })?;
        for (name, expected) in METRIC_NAMES.iter().zip(brute.rates) {
            ensure(report.get(name) == expected, || {
                format!("batch {b}: {name} {:?} vs {expected:?}", report.get(name))
            })?;
        }
        if counts.V <= 1 && g > 0 {
            degenerate[counts.V] += 1;
        }
    }
    ensure(degenerate[0] > 0 && degenerate[1] > 0, || {
        "no V=0 or V=1 batch exercised".into()
    })?;
    within_time(start, Duration::from_secs(10))?;
    Ok(format!(
        "500 batches, {} with V=0, {} with V=1",
        degenerate[0], degenerate[1]
    ))
}

fn composite_spot_values() -> Outcome {
    let a = composite(&[Some(0.9), Some(0.1)]).ok_or("null")?;
    let b = composite(&[Some(0.5), Some(0.5)]).ok_or("null")?;
    let c = composite(&[Some(0.7), Some(0.7)]).ok_or("null")?;
    for (got, want) in [(a, 0.3), (b, 0.5), (c, 0.7)] {
        ensure((got - want).abs() < 1e-12, || {
            format!("overall {got} vs {want}")
        })?;
    }
    ensure(c > b && b > a, || {
        format!("ordering broken: A {a} B {b} C {c}")
    })?;
    Ok(format!("A {a:.3} < B {b:.3} < C {c:.3}"))
}

fn canonicalization() -> Outcome {
    let start = Instant::now();
    let mols = druglike();
    ensure(mols.len() == 200, || {
        format!("fixture has {} molecules", mols.len())
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for mol in &mols {
        let canon = canonicalize(mol);
        for _ in 0..20 {
            let mut ranks: Vec<usize> = (0..mol.atom_count()).collect();
            ranks.shuffle(&mut rng);
            let rewritten = write_smiles(mol, &ranks);
            let again = parse_smiles(&rewritten).map_err(|e| format!("{rewritten}: {e}"))?;
            ensure(canonicalize(&again) == canon, || {
                format!("{rewritten} does not canonicalize to {canon}")
            })?;
        }
        let reparsed = canon.parse().map_err(|e| format!("{canon}: {e}"))?;
        ensure(canonicalize(&reparsed) == canon, || {
            format!("{canon} not idempotent")
        })?;
    }
    let alphabet = b"CNOSPFIcnosp()[]=#@+-123456789%.Hl\\/ BrZz";
    let mut parsed = 0;
    for i in 0..100_000 {
        let len = rng.random_range(0..24);
        let bytes: Vec<u8> = if i % 2 == 0 {
            (0..len).map(|_| rng.random()).collect()
        } else {
            (0..len)
                .map(|_| *alphabet.choose(&mut rng).unwrap())
                .collect()
        };
        let text = String::from_utf8_lossy(&bytes);
        if let Ok(mol) = parse_smiles(&text) {
            parsed += 1;
            if validate(&mol).is_valid() {
                let canon = canonicalize(&mol);
                let again = canon
                    .parse()
                    .map_err(|e| format!("{text:?} -> {canon}: {e}"))?;
                ensure(canonicalize(&again) == canon, || {
                    format!("{text:?}: canonical form not idempotent")
                })?;
            }
        }
    }
    within_time(start, Duration::from_secs(30))?;
    Ok(format!(
        "200 x 20 rewritings, 100000 fuzz inputs ({parsed} parsed)"
    ))
}

fn kekulization() -> Outcome {
    for s in ["c1ccccc1", "c1ccncc1", "c1ccc2ccccc2c1", "c1c[nH]cn1"] {
        kekulize(&parse_smiles(s).unwrap()).map_err(|e| format!("{s}: {e}"))?;
    }
    ensure(kekulize(&parse_smiles("c1ccc1").unwrap()).is_err(), || {
        "c1ccc1 kekulized".into()
    })?;
    let mut checked = 0;
    for mol in druglike() {
        if !mol.atoms.iter().any(|a| a.aromatic) {
            continue;
        }
        checked += 1;
        let ok = kekulize(&mol).is_ok();
        ensure(ok == brute_force_matchable(&mol), || {
            format!("{} disagrees with brute force", canonicalize(&mol))
        })?;
    }
    Ok(format!("{checked} aromatic fixture molecules"))
}

fn fingerprints() -> Outcome {
    let mols = druglike();
    let fps: Vec<Fingerprint> = mols.iter().map(default_fingerprint).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let (a, b) = (
            &fps[rng.random_range(0..fps.len())],
            &fps[rng.random_range(0..fps.len())],
        );
        let t = tanimoto(a, b).map_err(|e| e.to_string())?;
        ensure((0.0..=1.0).contains(&t), || {
            format!("tanimoto {t} out of range")
        })?;
        ensure(t == tanimoto(b, a).unwrap(), || {
            "tanimoto not symmetric".into()
        })?;
        ensure(t == tanimoto_bits(a, b), || {
            "tanimoto differs from bit scan".into()
        })?;
        ensure(tanimoto(a, a).unwrap() == 1.0, || {
            "self-similarity not 1".into()
        })?;
    }
    for size in [2, 10, 50] {
        let batch: Vec<&Fingerprint> = fps.choose_multiple(&mut rng, size).collect();
        let mut total = 0.0;
        let mut pairs = 0;
        for i in 0..batch.len() {
            for j in 0..batch.len() {
                if i != j {
                    total += tanimoto_bits(batch[i], batch[j]);
                    pairs += 1;
                }
            }
        }
        let expected = 1.0 - total / pairs as f64;
        let got = diversity(&batch).ok_or("null diversity")?;
        ensure((got - expected).abs() < 1e-12, || {
            format!("diversity {got} vs {expected}")
        })?;
    }
    Ok("1000 pairs, 3 batches".into())
}

fn correlation_signs() -> Outcome {
    let start = Instant::now();
    let text =
        std::fs::read_to_string(fixture("published_task_means.csv")).map_err(|e| e.to_string())?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().ok_or("empty file")?.split(',').collect();
    let base = [
        "validity",
        "success_rate",
        "novelty",
        "uniqueness",
        "diversity",
    ];
    let cols: Vec<usize> = base
        .iter()
        .map(|m| {
            header
                .iter()
                .position(|h| h == m)
                .ok_or(format!("missing {m}"))
        })
        .collect::<Result<_, _>>()?;
    let task_col = header
        .iter()
        .position(|h| *h == "task")
        .ok_or("missing task")?;
    let rows: Vec<Vec<Option<f64>>> = lines
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| !["drd2", "jnk3", "gsk3b"].contains(&f[task_col]))
        .map(|f| cols.iter().map(|&c| f[c].parse().ok()).collect())
        .collect();
    ensure(rows.len() == 84, || {
        format!("{} rows after filtering", rows.len())
    })?;
    let m = correlation_matrix(&base, &rows).map_err(|e| e.to_string())?;
    let convergent = ["validity", "success_rate"];
    let mut signs = Vec::new();
    for i in 0..5 {
        for j in i + 1..5 {
            let (a, b) = (base[i], base[j]);
            let r = m.get(a, b).ok_or(format!("null correlation {a}-{b}"))?;
            // independent recomputation over the same rows
            let x: Vec<f64> = rows.iter().map(|row| row[i].unwrap()).collect();
            let y: Vec<f64> = rows.iter().map(|row| row[j].unwrap()).collect();
            let direct = pearson(&x, &y).unwrap().unwrap();
            ensure((r - direct).abs() < 1e-12, || {
                format!("{a}-{b}: matrix {r} vs direct {direct}")
            })?;
            let same_block = convergent.contains(&a) == convergent.contains(&b);
            ensure((r > 0.0) == same_block, || {
                format!("{a}-{b}: r = {r:.3} has the wrong sign")
            })?;
            signs.push(format!("{r:+.2}"));
        }
    }
    within_time(start, Duration::from_secs(1))?;
    Ok(format!("84 rows, r = [{}]", signs.join(" ")))
}

fn icl_selector() -> Outcome {
    let canon: Vec<CanonicalSmiles> = druglike().iter().map(canonicalize).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut exhaustive, mut local) = (0, 0);
    for p in 0..200 {
        let n = rng.random_range(1..=30);
        let pool: Vec<CanonicalSmiles> = canon.choose_multiple(&mut rng, n).cloned().collect();
        let k = rng.random_range(1..=5);
        let dist = distance_matrix(&pool);
        let r = pam(&dist, k);
        ensure(
            !r.medoids.is_empty() && r.medoids.iter().all(|&m| m < n),
            || format!("pool {p}: bad medoids"),
        )?;
        let distinct: HashSet<_> = r.medoids.iter().collect();
        ensure(distinct.len() == r.medoids.len(), || {
            format!("pool {p}: repeated medoid")
        })?;
        ensure(r.trace.windows(2).all(|w| w[1] < w[0]), || {
            format!("pool {p}: trace not decreasing")
        })?;
        ensure((r.trace.last().unwrap() - r.objective).abs() < 1e-9, || {
            format!("pool {p}: trace end != objective")
        })?;
        ensure(
            (medoid_cost(&dist, &r.medoids) - r.objective).abs() < 1e-9,
            || format!("pool {p}: objective"),
        )?;
        let combos = (0..k.min(n)).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128);
        let is_exhaustive = r.medoids.len() == k.min(n)
            && combos <= 50_000
            && (exhaustive_optimum(&dist, k) - r.objective).abs() < 1e-9;
        if is_exhaustive {
            exhaustive += 1;
        } else {
            ensure(is_swap_local_optimum(&dist, &r.medoids, 1e-12), || {
                format!("pool {p}: not swap-local optimal")
            })?;
            local += 1;
        }
    }
    for f in 0..50 {
        let n = rng.random_range(1..=60);
        let values: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(0..500u32)) / 500.0)
            .collect();
        let got = percentile_threshold(&values, POOL_QUANTILE).map_err(|e| e.to_string())?;
        let want = nearest_rank(&values, 9, 10);
        ensure(got == want, || {
            format!("fixture {f}: threshold {got} vs nearest rank {want}")
        })?;
    }
    Ok(format!(
        "{exhaustive} exhaustive optima, {local} verified local optima, 50 percentile fixtures"
    ))
}

fn logp_rule() -> Outcome {
    let registry = TaskRegistry::builtin();
    let mut cases = 0;
    let logp_tasks = registry
        .tasks()
        .iter()
        .filter(|t| t.constraints.iter().any(|c| c.property == "logp"));
    for task in logp_tasks.filter(|t| t.numeric_target.is_some()) {
        let target = task.numeric_target.unwrap();
        for (offset, expected) in [(0.99, true), (1.00, true), (1.01, false)] {
            for sign in [1.0, -1.0] {
                let score = target + sign * offset;
                let mut rows = BTreeMap::new();
                for c in &task.constraints {
                    rows.insert(c.property.clone(), vec![Some(score)]);
                }
                let got =
                    check_constraints(&task.constraints, &rows, 1).map_err(|e| e.to_string())?[0];
                ensure(got == expected, || {
                    format!("{}: score {score} classified {got}", task.name)
                })?;
                cases += 1;
            }
        }
    }
    ensure(cases == 30, || {
        format!("{cases} boundary cases, expected 30")
    })?;
    Ok("5 targets x 6 boundary scores".into())
}

fn format_cell(values: &[Option<f64>]) -> String {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        return "NA".into();
    }
    let n = present.len() as f64;
    let mean = present.iter().sum::<f64>() / n;
    let std = if present.len() < 2 {
        0.0
    } else {
        (present.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let fmt = |x: f64| {
        let s = format!("{x:.3}");
        let s = s.trim_end_matches('0');
        let s = if s.ends_with('.') {
            format!("{s}0")
        } else {
            s.to_string()
        };
        if s == "-0.0" {
            "0.0".to_string()
        } else {
            s
        }
    };
    format!("{} ({})", fmt(mean), fmt(std))
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = fixture("golden/mock_eval.json");
    let status = Command::new(env!("CARGO_BIN_EXE_molcreativity"))
        .args([
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            out.path().to_str().unwrap(),
            "mock-eval",
        ])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!(
            "mock-eval failed: {}",
            String::from_utf8_lossy(&status.stderr)
        )
    })?;
    let expected = fixture("golden/expected");
    let tasks = ["small", "light", "rings_2"];
    let mut compared: Vec<String> = tasks.iter().map(|t| format!("reports/{t}.json")).collect();
    compared.push("summary.csv".into());
    for rel in &compared {
        let got = std::fs::read(out.path().join(rel)).map_err(|e| format!("{rel}: {e}"))?;
        let want = std::fs::read(expected.join(rel)).map_err(|e| format!("golden {rel}: {e}"))?;
        ensure(got == want, || format!("{rel} differs from golden"))?;
    }

    let reference = load_reference(&[fixture("druglike.smi"), fixture("extra.smi.gz")])
        .map_err(|e| e.to_string())?;
    let reference: HashSet<String> = reference.iter().map(|c| c.as_str().to_string()).collect();
    let summary = std::fs::read_to_string(out.path().join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for (line, task) in lines.zip(tasks) {
        let mut per_metric = vec![Vec::new(); METRIC_NAMES.len()];
        for run in 0..5 {
            let path = out.path().join(format!("batches/{task}/run_{run}.json"));
            let record: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(&path).map_err(|e| e.to_string())?)
                    .unwrap();
            let items: Vec<(Option<String>, bool)> = record["batch"]["items"]
                .as_array()
                .ok_or("batch items missing")?
                .iter()
                .map(|i| {
                    (
                        i["canonical"].as_str().map(str::to_string),
                        i["success"].as_bool().unwrap_or(false),
                    )
                })
                .collect();
            ensure(items.len() == 100, || {
                format!("{task} run {run}: {} items", items.len())
            })?;
            let brute = brute_metrics(&items, &reference);
            for (m, rate) in brute.rates.iter().enumerate() {
                per_metric[m].push(*rate);
            }
        }
        let cells: Vec<&str> = line.split(',').collect();
        ensure(cells[0] == task, || {
            format!("row order: {} vs {task}", cells[0])
        })?;
        for (m, name) in METRIC_NAMES.iter().enumerate() {
            let col = header
                .iter()
                .position(|h| h == name)
                .ok_or(format!("column {name}"))?;
            let want = format_cell(&per_metric[m]);
            ensure(cells[col] == want, || {
                format!("{task}/{name}: csv {} vs recomputed {want}", cells[col])
            })?;
        }
    }
    within_time(start, Duration::from_secs(60))?;
    Ok(format!(
        "3 tasks x 5 runs x 100, byte-identical, {:.2?}",
        start.elapsed()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("gm-laws", gm_laws),
        ("metric-oracle-equivalence", metric_oracle),
        ("composite-spot-values", composite_spot_values),
        ("canonicalization", canonicalization),
        ("kekulization", kekulization),
        ("fingerprint-tanimoto", fingerprints),
        ("correlation-sign-reproduction", correlation_signs),
        ("icl-selector", icl_selector),
        ("logp-success-rule", logp_rule),
        ("end-to-end-mock-run", end_to_end),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name:<32} {:>9.2?}  {detail}", start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name:<32} {:>9.2?}  {why}", start.elapsed());
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
