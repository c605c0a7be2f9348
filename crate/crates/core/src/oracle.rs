//! Property oracles: built-in structural scores and external adapter
//! processes speaking newline-delimited JSON.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::chem::{parse_smiles, CanonicalSmiles, Element, Molecule};

pub const PROTOCOL_VERSION: u64 = 1;
pub const DEFAULT_CHUNK_SIZE: usize = 64;
pub const BUILTIN_ORACLES: [&str; 3] = ["heavy_atom_count", "mol_weight", "ring_count"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("no oracle named {0:?} is registered")]
    UnknownOracle(String),
    #[error("oracle adapter down: {0}")]
    AdapterDown(String),
    #[error("oracle adapter protocol error: {0}")]
    Protocol(String),
    #[error("oracle adapter timed out after {0:?}")]
    Timeout(Duration),
    #[error("no scores for property {0:?}")]
    MissingProperty(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = ">=", alias = "ge", alias = "≥")]
    Ge,
    #[serde(rename = "<=", alias = "le", alias = "≤")]
    Le,
    #[serde(rename = "within")]
    Within,
}

/// One property requirement of a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub property: String,
    pub relation: Relation,
    /// Bound for `>=`/`<=`, target value for `within`.
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
}

impl Constraint {
    pub fn at_least(property: &str, threshold: f64) -> Constraint {
        Constraint {
            property: property.into(),
            relation: Relation::Ge,
            threshold,
            window: None,
        }
    }

    pub fn at_most(property: &str, threshold: f64) -> Constraint {
        Constraint {
            property: property.into(),
            relation: Relation::Le,
            threshold,
            window: None,
        }
    }

    pub fn within(property: &str, target: f64, window: f64) -> Constraint {
        Constraint {
            property: property.into(),
            relation: Relation::Within,
            threshold: target,
            window: Some(window),
        }
    }

    /// A null score never satisfies a constraint.
    pub fn is_satisfied(&self, score: Option<f64>) -> bool {
        let Some(s) = score else { return false };
        match self.relation {
            Relation::Ge => s >= self.threshold,
            Relation::Le => s <= self.threshold,
            Relation::Within => (s - self.threshold).abs() <= self.window.unwrap_or(0.0),
        }
    }
}

/// Per-molecule success: every constraint holds on its property's score.
pub fn check_constraints(
    constraints: &[Constraint],
    scores: &BTreeMap<String, Vec<Option<f64>>>,
    n_molecules: usize,
) -> Result<Vec<bool>, OracleError> {
    let mut flags = vec![true; n_molecules];
    for c in constraints {
        let row = scores
            .get(&c.property)
            .ok_or_else(|| OracleError::MissingProperty(c.property.clone()))?;
        if row.len() != n_molecules {
            return Err(OracleError::MissingProperty(c.property.clone()));
        }
        for (flag, &s) in flags.iter_mut().zip(row) {
            *flag &= c.is_satisfied(s);
        }
    }
    Ok(flags)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub score: Option<f64>,
    pub oracle: String,
    /// Wall time of the request that produced the score (zero for cache hits).
    pub latency: Duration,
}

/// Built-in structural score, `None` for unknown names.
pub fn builtin_score(name: &str, mol: &Molecule) -> Option<f64> {
    match name {
        "heavy_atom_count" => {
            Some(mol.atoms.iter().filter(|a| a.element != Element::H).count() as f64)
        }
        "mol_weight" => Some(mol_weight(mol)),
        "ring_count" => Some(mol.ring_count() as f64),
        _ => None,
    }
}

/// Average molecular weight including implicit and bracket hydrogens.
pub fn mol_weight(mol: &Molecule) -> f64 {
    let h = Element::H.atomic_weight();
    mol.atoms
        .iter()
        .map(|a| a.element.atomic_weight() + f64::from(a.total_h()) * h)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterConfig {
    /// Program and arguments.
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_chunk")]
    pub chunk_size: usize,
}

fn default_timeout() -> f64 {
    30.0
}

fn default_chunk() -> usize {
    DEFAULT_CHUNK_SIZE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub version: u64,
    pub oracles: Vec<String>,
    /// Backing tool name -> version, when the adapter reports it.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tools: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct HelloLine {
    hello: Hello,
}

#[derive(Serialize)]
struct Request<'a> {
    id: u64,
    oracle: &'a str,
    smiles: &'a [&'a str],
}

/// Parses one response line for request `id` expecting `n` scores.
pub fn parse_response(line: &str, id: u64, n: usize) -> Result<Vec<Option<f64>>, OracleError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| OracleError::Protocol(format!("bad JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| OracleError::Protocol("response is not an object".into()))?;
    match obj.get("id").and_then(Value::as_u64) {
        Some(got) if got == id => {}
        Some(got) => {
            return Err(OracleError::Protocol(format!(
                "response id {got}, expected {id}"
            )))
        }
        None => return Err(OracleError::Protocol("response without integer id".into())),
    }
    if let Some(err) = obj.get("error") {
        return match err.as_str() {
            Some("unknown_oracle") => Err(OracleError::UnknownOracle(String::new())),
            Some(other) => Err(OracleError::Protocol(format!("adapter error: {other}"))),
            None => Err(OracleError::Protocol("non-string error field".into())),
        };
    }
    let scores = obj
        .get("scores")
        .and_then(Value::as_array)
        .ok_or_else(|| OracleError::Protocol("response without scores array".into()))?;
    if scores.len() != n {
        return Err(OracleError::Protocol(format!(
            "{} scores for {n} molecules",
            scores.len()
        )));
    }
    scores
        .iter()
        .map(|s| match s {
            Value::Null => Ok(None),
            Value::Number(x) => Ok(x.as_f64()),
            other => Err(OracleError::Protocol(format!(
                "score {other} is neither number nor null"
            ))),
        })
        .collect()
}

/// Parses the handshake line.
pub fn parse_hello(line: &str) -> Result<Hello, OracleError> {
    let hello: HelloLine = serde_json::from_str(line)
        .map_err(|e| OracleError::Protocol(format!("bad handshake: {e}")))?;
    if hello.hello.version != PROTOCOL_VERSION {
        return Err(OracleError::Protocol(format!(
            "unsupported protocol version {}",
            hello.hello.version
        )));
    }
    Ok(hello.hello)
}

/// One running adapter process. Requests are strictly sequential.
pub struct AdapterClient {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    next_id: u64,
    broken: Option<String>,
    pub hello: Hello,
    pub chunk_size: usize,
    /// Identity used in cache keys: command line plus reported tool versions.
    pub identity: String,
}

impl AdapterClient {
    pub fn spawn(config: &AdapterConfig) -> Result<AdapterClient, OracleError> {
        let (program, args) = config
            .command
            .split_first()
            .ok_or_else(|| OracleError::AdapterDown("empty adapter command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| OracleError::AdapterDown(format!("cannot start {program}: {e}")))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let timeout = Duration::from_secs_f64(config.timeout_secs.max(0.001));
        let stdin = child.stdin.take();
        let mut client = AdapterClient {
            child,
            stdin,
            lines: rx,
            timeout,
            next_id: 1,
            broken: None,
            hello: Hello {
                version: PROTOCOL_VERSION,
                oracles: Vec::new(),
                tools: BTreeMap::new(),
            },
            chunk_size: config.chunk_size.max(1),
            identity: String::new(),
        };
        let line = client.next_line().map_err(|e| match e {
            OracleError::Protocol(m) => OracleError::AdapterDown(format!("handshake failed: {m}")),
            OracleError::Timeout(_) => {
                OracleError::AdapterDown("no handshake before timeout".into())
            }
            other => other,
        })?;
        client.hello = parse_hello(&line).map_err(|e| OracleError::AdapterDown(e.to_string()))?;
        client.identity = format!("{}|{:?}", config.command.join(" "), client.hello.tools);
        Ok(client)
    }

    fn next_line(&mut self) -> Result<String, OracleError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(OracleError::AdapterDown(format!(
                "reading adapter output: {e}"
            ))),
            Err(RecvTimeoutError::Timeout) => Err(OracleError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                Err(OracleError::AdapterDown("adapter closed its output".into()))
            }
        }
    }

    pub fn serves(&self, oracle: &str) -> bool {
        self.hello.oracles.iter().any(|o| o == oracle)
    }

    /// Sends one request and waits for its response line.
    pub fn request(
        &mut self,
        oracle: &str,
        smiles: &[&str],
    ) -> Result<Vec<Option<f64>>, OracleError> {
        if let Some(reason) = &self.broken {
            return Err(OracleError::AdapterDown(reason.clone()));
        }
        let id = self.next_id;
        self.next_id += 1;
        let line =
            serde_json::to_string(&Request { id, oracle, smiles }).expect("request serializes");
        let result = self.exchange(&line, id, smiles.len());
        match &result {
            Err(OracleError::UnknownOracle(_)) => {
                return Err(OracleError::UnknownOracle(oracle.to_string()));
            }
            // the stream can no longer be trusted to be in step
            Err(e) => self.broken = Some(e.to_string()),
            Ok(_) => {}
        }
        result
    }

    fn exchange(&mut self, line: &str, id: u64, n: usize) -> Result<Vec<Option<f64>>, OracleError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| OracleError::AdapterDown("stdin closed".into()))?;
        writeln!(stdin, "{line}")
            .and_then(|_| stdin.flush())
            .map_err(|e| OracleError::AdapterDown(format!("writing request: {e}")))?;
        let reply = self.next_line()?;
        parse_response(&reply, id, n)
    }
}

impl Drop for AdapterClient {
    fn drop(&mut self) {
        // closing stdin lets a well-behaved adapter exit on its own
        self.stdin.take();
        let deadline = Instant::now() + Duration::from_millis(200);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

type CacheKey = (String, String, CanonicalSmiles);

/// Routes oracle names to built-ins or adapters and caches adapter scores.
pub struct OracleGateway {
    adapters: Vec<Mutex<AdapterClient>>,
    cache: Mutex<HashMap<CacheKey, Option<f64>>>,
}

impl Default for OracleGateway {
    fn default() -> Self {
        OracleGateway::builtin_only()
    }
}

impl OracleGateway {
    pub fn builtin_only() -> OracleGateway {
        OracleGateway {
            adapters: Vec::new(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_adapters(configs: &[AdapterConfig]) -> Result<OracleGateway, OracleError> {
        let adapters = configs
            .iter()
            .map(|c| AdapterClient::spawn(c).map(Mutex::new))
            .collect::<Result<_, _>>()?;
        Ok(OracleGateway {
            adapters,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Names of all oracles that can be scored, built-ins first.
    pub fn oracles(&self) -> Vec<String> {
        let mut out: Vec<String> = BUILTIN_ORACLES.iter().map(|s| s.to_string()).collect();
        for a in &self.adapters {
            for o in &a.lock().expect("adapter lock").hello.oracles {
                if !out.contains(o) {
                    out.push(o.clone());
                }
            }
        }
        out
    }

    pub fn has_oracle(&self, name: &str) -> bool {
        BUILTIN_ORACLES.contains(&name)
            || self
                .adapters
                .iter()
                .any(|a| a.lock().expect("adapter lock").serves(name))
    }

    /// Handshake data of every adapter, in configuration order.
    pub fn adapter_hellos(&self) -> Vec<Hello> {
        self.adapters
            .iter()
            .map(|a| a.lock().expect("adapter lock").hello.clone())
            .collect()
    }

    /// Scores aligned with `molecules`.
    pub fn score(
        &self,
        oracle: &str,
        molecules: &[CanonicalSmiles],
    ) -> Result<Vec<OracleResult>, OracleError> {
        if BUILTIN_ORACLES.contains(&oracle) {
            return Ok(molecules
                .iter()
                .map(|m| {
                    let start = Instant::now();
                    let score = parse_smiles(m.as_str())
                        .ok()
                        .and_then(|mol| builtin_score(oracle, &mol));
                    OracleResult {
                        score,
                        oracle: oracle.to_string(),
                        latency: start.elapsed(),
                    }
                })
                .collect());
        }
        let adapter = self
            .adapters
            .iter()
            .find(|a| a.lock().expect("adapter lock").serves(oracle))
            .ok_or_else(|| OracleError::UnknownOracle(oracle.to_string()))?;
        let mut client = adapter.lock().expect("adapter lock");
        let identity = client.identity.clone();
        let key = |m: &CanonicalSmiles| (identity.clone(), oracle.to_string(), m.clone());

        let mut results: Vec<Option<OracleResult>> = {
            let cache = self.cache.lock().expect("cache lock");
            molecules
                .iter()
                .map(|m| {
                    cache.get(&key(m)).map(|&score| OracleResult {
                        score,
                        oracle: oracle.to_string(),
                        latency: Duration::ZERO,
                    })
                })
                .collect()
        };
        // distinct uncached molecules in first-seen order
        let mut pending: Vec<&CanonicalSmiles> = Vec::new();
        for (m, r) in molecules.iter().zip(&results) {
            if r.is_none() && !pending.contains(&m) {
                pending.push(m);
            }
        }
        let chunk_size = client.chunk_size;
        for chunk in pending.chunks(chunk_size) {
            let texts: Vec<&str> = chunk.iter().map(|m| m.as_str()).collect();
            let start = Instant::now();
            let scores = client.request(oracle, &texts)?;
            let latency = start.elapsed();
            let mut cache = self.cache.lock().expect("cache lock");
            for (m, s) in chunk.iter().zip(scores) {
                cache.insert(key(m), s);
                for (slot, mol) in results.iter_mut().zip(molecules) {
                    if slot.is_none() && mol == *m {
                        *slot = Some(OracleResult {
                            score: s,
                            oracle: oracle.to_string(),
                            latency,
                        });
                    }
                }
            }
        }
        Ok(results
            .into_iter()
            .map(|r| r.expect("every slot scored"))
            .collect())
    }

    /// Scores for every property named by `constraints`, as rows keyed by
    /// property; `None` entries in `molecules` score null.
    pub fn score_properties(
        &self,
        constraints: &[Constraint],
        molecules: &[Option<CanonicalSmiles>],
    ) -> Result<BTreeMap<String, Vec<Option<f64>>>, OracleError> {
        let present: Vec<CanonicalSmiles> = molecules.iter().flatten().cloned().collect();
        let mut rows = BTreeMap::new();
        for c in constraints {
            if rows.contains_key(&c.property) {
                continue;
            }
            let mut scored = self.score(&c.property, &present)?.into_iter();
            let row = molecules
                .iter()
                .map(|m| m.as_ref().and_then(|_| scored.next().and_then(|r| r.score)))
                .collect();
            rows.insert(c.property.clone(), row);
        }
        Ok(rows)
    }
}
