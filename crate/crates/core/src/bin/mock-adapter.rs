//! Test adapter speaking the oracle wire protocol.
//!
//! Usage: `mock-adapter [--mode MODE] [--oracles a,b,c]` or
//! `mock-adapter --replay FIXTURE.jsonl`.
//!
//! Modes: `score` (deterministic pseudo-scores), `null`, `crash`,
//! `malformed`, `misaligned`, `wrong-id`, `silent`, `no-hello`,
//! `bad-version`.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::process::ExitCode;

use molcreativity::chem::canonical_if_valid;
use molcreativity::oracle::{builtin_score, BUILTIN_ORACLES};
use serde_json::{json, Value};

const DEFAULT_ORACLES: &str = "qed,sa,logp,bbb,hia,drd2,jnk3,gsk3b";

fn pseudo_score(oracle: &str, smiles: &str) -> Option<f64> {
    let canonical = canonical_if_valid(smiles)?;
    let mol = canonical.parse().ok()?;
    if BUILTIN_ORACLES.contains(&oracle) {
        return builtin_score(oracle, &mol);
    }
    // FNV-1a over oracle and canonical string, mapped to [0, 1)
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in oracle.bytes().chain([0]).chain(canonical.as_str().bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let unit = (h >> 11) as f64 / (1u64 << 53) as f64;
    let heavy = mol.atom_count() as f64;
    Some(match oracle {
        "logp" => (heavy / 4.0 - 3.0 + 2.0 * unit - 1.0).clamp(-6.0, 8.0),
        "sa" => 1.0 + 9.0 * unit,
        _ => unit,
    })
}

fn emit(out: &mut impl Write, v: &Value) -> io::Result<()> {
    writeln!(out, "{v}")?;
    out.flush()
}

fn replay(path: &str) -> io::Result<ExitCode> {
    let text = std::fs::read_to_string(path)?;
    let stdin = io::stdin();
    let mut input = stdin.lock().lines();
    let mut out = io::stdout().lock();
    for (n, line) in text.lines().enumerate() {
        let step: Value = serde_json::from_str(line).map_err(|e| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("fixture line {}: {e}", n + 1),
            )
        })?;
        match (step["from"].as_str(), step.get("line")) {
            (Some("adapter"), Some(v)) => emit(&mut out, v)?,
            (Some("harness"), Some(expected)) => {
                let Some(got) = input.next().transpose()? else {
                    eprintln!("replay: harness closed early, expected {expected}");
                    return Ok(ExitCode::from(3));
                };
                if serde_json::from_str::<Value>(&got).ok().as_ref() != Some(expected) {
                    eprintln!("replay: expected {expected}\nreplay: got      {got}");
                    return Ok(ExitCode::from(3));
                }
            }
            _ => {
                eprintln!("replay: bad fixture step {line}");
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> io::Result<ExitCode> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut mode = "score".to_string();
    let mut oracles = DEFAULT_ORACLES.to_string();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        match a.as_str() {
            "--mode" => mode = it.next().cloned().unwrap_or_default(),
            "--oracles" => oracles = it.next().cloned().unwrap_or_default(),
            "--replay" => return replay(it.next().map(String::as_str).unwrap_or_default()),
            other => {
                eprintln!("mock-adapter: unknown argument {other}");
                return Ok(ExitCode::from(2));
            }
        }
    }
    let served: Vec<&str> = oracles.split(',').filter(|s| !s.is_empty()).collect();
    let mut out = io::stdout().lock();
    match mode.as_str() {
        "no-hello" => return Ok(ExitCode::from(1)),
        "bad-version" => {
            emit(
                &mut out,
                &json!({"hello": {"version": 99, "oracles": served}}),
            )?;
        }
        _ => {
            let tools = BTreeMap::from([("mock-adapter", env!("CARGO_PKG_VERSION"))]);
            emit(
                &mut out,
                &json!({"hello": {"version": 1, "oracles": served, "tools": tools}}),
            )?;
        }
    }
    for line in io::stdin().lock().lines() {
        let line = line?;
        let req: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(_) => {
                emit(&mut out, &json!({"id": null, "error": "bad_request"}))?;
                continue;
            }
        };
        let id = req["id"].clone();
        let oracle = req["oracle"].as_str().unwrap_or_default();
        let smiles: Vec<&str> = req["smiles"]
            .as_array()
            .map(|a| a.iter().filter_map(Value::as_str).collect())
            .unwrap_or_default();
        if !served.contains(&oracle) {
            emit(&mut out, &json!({"id": id, "error": "unknown_oracle"}))?;
            continue;
        }
        match mode.as_str() {
            "crash" => return Ok(ExitCode::from(70)),
            "silent" => {
                std::thread::sleep(std::time::Duration::from_secs(30));
                return Ok(ExitCode::SUCCESS);
            }
            "malformed" => {
                writeln!(out, "{{\"id\": {id}, \"scores\": [")?;
                out.flush()?;
            }
            "null" => emit(
                &mut out,
                &json!({"id": id, "scores": vec![Value::Null; smiles.len()]}),
            )?,
            "misaligned" => {
                let scores: Vec<Option<f64>> = smiles
                    .iter()
                    .skip(1)
                    .map(|s| pseudo_score(oracle, s))
                    .collect();
                emit(&mut out, &json!({"id": id, "scores": scores}))?;
            }
            "wrong-id" => {
                let scores: Vec<Option<f64>> =
                    smiles.iter().map(|s| pseudo_score(oracle, s)).collect();
                emit(
                    &mut out,
                    &json!({"id": id.as_u64().unwrap_or(0) + 1000, "scores": scores}),
                )?;
            }
            _ => {
                let scores: Vec<Option<f64>> =
                    smiles.iter().map(|s| pseudo_score(oracle, s)).collect();
                emit(&mut out, &json!({"id": id, "scores": scores}))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
