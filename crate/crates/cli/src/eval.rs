//! Generation -> scoring -> metrics -> aggregation, with flat-file output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use molcreativity::chem::{canonical_if_valid, CanonicalSmiles};
use molcreativity::fingerprint::default_fingerprint;
use molcreativity::generation::{
    generate, Backend, GenerationBatch, GenerationRequest, MockConfig, RemoteGenerator,
    TaskRegistry, TaskSpec,
};
use molcreativity::icl::IclSelection;
use molcreativity::metrics::{
    aggregate_runs, compute_metrics, novelty_by_corpus, MetricCounts, MetricReport, ScoredItem,
    ValidMolecule, METRIC_NAMES,
};
use molcreativity::oracle::{
    check_constraints, Hello, OracleError, OracleGateway, BUILTIN_ORACLES,
};
use molcreativity::refset::{load_reference, ReferenceIndex};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{BackendConfig, Config, Overrides, RunSettings};
use crate::error::CliError;

/// Everything an evaluation needs, resolved and checked.
pub struct Prepared {
    pub config: Config,
    pub tasks: Vec<TaskSpec>,
    pub icl: BTreeMap<String, Vec<CanonicalSmiles>>,
    pub reference: ReferenceIndex,
    pub settings: RunSettings,
    pub backend: Backend,
    pub gateway: OracleGateway,
}

fn read_smiles_file(path: &Path) -> Result<Vec<CanonicalSmiles>, CliError> {
    let index = load_reference(&[path])?;
    Ok(index.iter().cloned().collect())
}

fn load_registry(config: &Config) -> Result<TaskRegistry, CliError> {
    let mut registry = TaskRegistry::builtin();
    if let Some(path) = &config.registry {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        registry.merge(TaskRegistry::from_json(&text)?);
    }
    Ok(registry)
}

fn load_icl(
    config: &Config,
    tasks: &[TaskSpec],
) -> Result<BTreeMap<String, Vec<CanonicalSmiles>>, CliError> {
    let shared = config
        .icl_examples
        .iter()
        .map(|s| {
            canonical_if_valid(s)
                .ok_or_else(|| CliError::Config(format!("ICL example {s:?} is not valid")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = BTreeMap::new();
    for task in tasks {
        let examples = match config.icl_selections.get(&task.name) {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let selection: IclSelection = serde_json::from_str(&text)
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                selection.examples()
            }
            None => shared.clone(),
        };
        out.insert(task.name.clone(), examples);
    }
    Ok(out)
}

/// Resolves tasks and inputs, starts adapters and checks that every task
/// property has an oracle. Nothing is generated yet.
pub fn prepare(
    config: Config,
    task_names: &[String],
    overrides: &Overrides,
    force_mock: bool,
) -> Result<Prepared, CliError> {
    let registry = load_registry(&config)?;
    let names = if task_names.is_empty() {
        config.tasks.clone()
    } else {
        task_names.to_vec()
    };
    if names.is_empty() {
        return Err(CliError::Config("no tasks given".into()));
    }
    let tasks = names
        .iter()
        .map(|n| registry.get(n).cloned())
        .collect::<Result<Vec<_>, _>>()?;
    let settings = RunSettings::resolve(&config, overrides);
    if config.reference.is_empty() {
        return Err(CliError::Config("no reference files given".into()));
    }
    let reference = load_reference(&config.reference)?;
    if reference.warnings > 0 {
        log::warn!("{} unparsable lines skipped", reference.warnings);
    }
    let icl = load_icl(&config, &tasks)?;

    let gateway = OracleGateway::with_adapters(&config.adapters)?;
    for task in &tasks {
        for p in task.properties() {
            if !gateway.has_oracle(p) {
                return Err(CliError::Adapter(OracleError::AdapterDown(format!(
                    "task {:?} needs oracle {p:?} but no configured adapter serves it",
                    task.name
                ))));
            }
        }
    }

    let backend_config = match (&config.backend, force_mock) {
        (BackendConfig::Remote(_), true) => BackendConfig::default(),
        (b, _) => b.clone(),
    };
    let backend = match backend_config {
        BackendConfig::Mock { pool, mock } => {
            let pool = match pool {
                Some(p) => read_smiles_file(&p)?,
                None => reference.iter().cloned().collect(),
            };
            Backend::Mock { pool, config: mock }
        }
        BackendConfig::Remote(remote) => Backend::Remote(
            RemoteGenerator::from_config(&remote).map_err(|e| CliError::Backend(e.to_string()))?,
        ),
    };
    Ok(Prepared {
        config,
        tasks,
        icl,
        reference,
        settings,
        backend,
        gateway,
    })
}

fn digest_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    for l in lines {
        h.update(l.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSnapshot {
    pub size: usize,
    pub corpora: Vec<String>,
    /// SHA-256 over the sorted canonical members.
    pub digest: String,
}

/// The deterministic part of a manifest; its hash identifies the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestContent {
    pub tasks: Vec<TaskSpec>,
    pub backend: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock: Option<MockConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_digest: Option<String>,
    pub settings: RunSettings,
    pub icl_examples: BTreeMap<String, Vec<CanonicalSmiles>>,
    pub reference: ReferenceSnapshot,
    pub builtin_oracles: Vec<String>,
    pub adapters: Vec<Hello>,
}

impl ManifestContent {
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub hash: String,
    pub content: ManifestContent,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub config: Config,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub manifest_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_target: Option<f64>,
    pub counts: MetricCounts,
    pub report: MetricReport,
    pub batch: GenerationBatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub run: usize,
    pub counts: MetricCounts,
    pub report: MetricReport,
    pub novelty_by_corpus: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub metric: String,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
    pub n_null: usize,
    pub cell: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub manifest_hash: String,
    pub task: TaskSpec,
    /// Generations accounted over all runs.
    pub generated: usize,
    pub runs: Vec<RunEntry>,
    pub summary: Vec<SummaryEntry>,
}

impl TaskReport {
    pub fn summarize(manifest_hash: &str, task: &TaskSpec, runs: Vec<RunEntry>) -> TaskReport {
        let reports: Vec<MetricReport> = runs.iter().map(|r| r.report).collect();
        let summary = aggregate_runs(&reports)
            .into_iter()
            .map(|(metric, s)| SummaryEntry {
                metric: metric.to_string(),
                mean: s.mean,
                std: s.std,
                n: s.n,
                n_null: s.n_null,
                cell: s.cell(),
            })
            .collect();
        TaskReport {
            manifest_hash: manifest_hash.to_string(),
            task: task.clone(),
            generated: runs.iter().map(|r| r.counts.G).sum(),
            runs,
            summary,
        }
    }

    pub fn cell(&self, metric: &str) -> Option<&str> {
        self.summary
            .iter()
            .find(|s| s.metric == metric)
            .map(|s| s.cell.as_str())
    }
}

/// Counts, metrics and per-corpus novelty of one scored batch.
pub type BatchScore = (MetricCounts, MetricReport, BTreeMap<String, Option<f64>>);

/// Scores a batch in place (per-item scores and success/novel flags) and
/// computes its metrics.
pub fn score_batch(
    batch: &mut GenerationBatch,
    task: &TaskSpec,
    gateway: &OracleGateway,
    reference: &ReferenceIndex,
) -> Result<BatchScore, OracleError> {
    let molecules: Vec<Option<CanonicalSmiles>> =
        batch.items.iter().map(|i| i.canonical.clone()).collect();
    let rows = gateway.score_properties(&task.constraints, &molecules)?;
    let met = check_constraints(&task.constraints, &rows, molecules.len())?;
    let mut scored = Vec::with_capacity(batch.items.len());
    for (i, item) in batch.items.iter_mut().enumerate() {
        item.scores = rows.iter().map(|(p, row)| (p.clone(), row[i])).collect();
        let molecule = item.canonical.as_ref().map(|c| ValidMolecule {
            canonical: c.clone(),
            fingerprint: default_fingerprint(&c.parse().expect("canonical SMILES parses")),
        });
        item.success = molecule.is_some() && met[i];
        item.novel = item
            .canonical
            .as_ref()
            .is_some_and(|c| !reference.contains(c));
        scored.push(ScoredItem {
            molecule,
            constraints_met: met[i],
        });
    }
    let (counts, report) = compute_metrics(&scored, reference);
    Ok((counts, report, novelty_by_corpus(&scored, reference)))
}

pub struct EvalOutcome {
    pub manifest: RunManifest,
    pub reports: Vec<TaskReport>,
    pub summary_csv: String,
}

pub fn summary_csv(reports: &[TaskReport]) -> String {
    let mut out = String::from("task");
    for m in METRIC_NAMES {
        out.push(',');
        out.push_str(m);
    }
    out.push('\n');
    for r in reports {
        out.push_str(&r.task.name);
        for m in METRIC_NAMES {
            out.push(',');
            out.push_str(r.cell(m).unwrap_or("NA"));
        }
        out.push('\n');
    }
    out
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn manifest_content(prep: &Prepared) -> ManifestContent {
    let (mock, pool_digest) = match &prep.backend {
        Backend::Mock { pool, config } => {
            let mut sorted: Vec<&str> = pool.iter().map(|m| m.as_str()).collect();
            sorted.sort_unstable();
            (Some(config.clone()), Some(digest_lines(sorted)))
        }
        Backend::Remote(_) => (None, None),
    };
    ManifestContent {
        tasks: prep.tasks.clone(),
        backend: prep.backend.identity(),
        mock,
        pool_digest,
        settings: prep.settings,
        icl_examples: prep.icl.clone(),
        reference: ReferenceSnapshot {
            size: prep.reference.size(),
            corpora: prep
                .reference
                .corpora()
                .into_iter()
                .map(str::to_string)
                .collect(),
            digest: digest_lines(prep.reference.iter().map(|m| m.as_str())),
        },
        builtin_oracles: BUILTIN_ORACLES.iter().map(|s| s.to_string()).collect(),
        adapters: prep.gateway.adapter_hellos(),
    }
}

/// Runs every task and writes the run directory. The summary CSV and the
/// manifest are written only after all tasks finished.
pub fn run_eval(prep: &Prepared, out_dir: &Path) -> Result<EvalOutcome, CliError> {
    let started_unix = unix_now();
    let content = manifest_content(prep);
    let hash = content.hash();
    let mut outputs: Vec<String> = Vec::new();
    let mut reports = Vec::with_capacity(prep.tasks.len());

    for task in &prep.tasks {
        let request = GenerationRequest {
            task: task.clone(),
            icl_examples: prep.icl.get(&task.name).cloned().unwrap_or_default(),
            temperature: prep.settings.temperature,
            batch_size: prep.settings.batch,
            runs: prep.settings.runs,
            seed: prep.settings.seed,
        };
        log::info!(
            "task {}: generating {} x {}",
            task.name,
            request.runs,
            request.batch_size
        );
        let batches = generate(&request, &prep.backend)?;
        let mut entries = Vec::with_capacity(batches.len());
        for mut batch in batches {
            let (counts, report, by_corpus) =
                score_batch(&mut batch, task, &prep.gateway, &prep.reference)?;
            let rel = format!("batches/{}/run_{}.json", task.name, batch.run);
            entries.push(RunEntry {
                run: batch.run,
                counts,
                report,
                novelty_by_corpus: by_corpus,
            });
            write_json(
                &out_dir.join(&rel),
                &RunRecord {
                    manifest_hash: hash.clone(),
                    numeric_target: task.numeric_target,
                    counts,
                    report,
                    batch,
                },
            )?;
            outputs.push(rel);
        }
        let report = TaskReport::summarize(&hash, task, entries);
        let rel = format!("reports/{}.json", task.name);
        write_json(&out_dir.join(&rel), &report)?;
        outputs.push(rel);
        reports.push(report);
    }

    let csv = summary_csv(&reports);
    let csv_path = out_dir.join("summary.csv");
    fs::write(&csv_path, &csv).map_err(|e| CliError::io(&csv_path, e))?;
    outputs.push("summary.csv".into());
    let manifest = RunManifest {
        hash,
        content,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix,
        finished_unix: unix_now(),
        config: prep.config.clone(),
        outputs,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(EvalOutcome {
        manifest,
        reports,
        summary_csv: csv,
    })
}

/// Loads every `run_*.json` below `dir/batches`, ordered by task then run.
pub fn load_run_records(dir: &Path) -> Result<Vec<RunRecord>, CliError> {
    let root = dir.join("batches");
    let mut files: Vec<PathBuf> = Vec::new();
    let tasks = fs::read_dir(&root).map_err(|e| CliError::io(&root, e))?;
    for task_dir in tasks {
        let task_dir = task_dir.map_err(|e| CliError::io(&root, e))?.path();
        if !task_dir.is_dir() {
            continue;
        }
        for f in fs::read_dir(&task_dir).map_err(|e| CliError::io(&task_dir, e))? {
            let f = f.map_err(|e| CliError::io(&task_dir, e))?.path();
            if f.extension().is_some_and(|e| e == "json") {
                files.push(f);
            }
        }
    }
    let mut records = files
        .iter()
        .map(|f| {
            let text = fs::read_to_string(f).map_err(|e| CliError::io(f, e))?;
            serde_json::from_str::<RunRecord>(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", f.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    records.sort_by(|a, b| {
        a.batch
            .task
            .cmp(&b.batch.task)
            .then(a.batch.run.cmp(&b.batch.run))
    });
    Ok(records)
}
