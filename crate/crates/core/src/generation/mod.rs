//! Prompting, sampling backends, reply parsing and batch bookkeeping.

mod extract;
mod mock;
mod prompt;
mod remote;
mod task;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::{extract_smiles, Extraction, ExtractionStage};
pub use mock::{mock_generate, stream_seed, MockConfig};
pub use prompt::{build_prompt, constraint_text, format_target, Prompt, SYSTEM_PREAMBLE};
pub use remote::{
    parse_completion, run_slots, ChatRequest, ChatTransport, HttpTransport, RemoteConfig,
    RemoteGenerator, SlotResult, TransportError,
};
pub use task::{TaskError, TaskRegistry, TaskSpec, VALUE_SLOT};

use crate::chem::{canonicalize, parse_smiles, validate, CanonicalSmiles};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerationError {
    #[error("task {0:?} needs a numeric target for its [VALUE] slot")]
    MissingValue(String),
    #[error("mock generator pool is empty")]
    EmptyPool,
    #[error("backend authentication failed: {0}")]
    BackendAuth(String),
    #[error("backend failed every request of run {run} for task {task:?}: {last_error}")]
    BackendExhausted {
        task: String,
        run: usize,
        last_error: String,
    },
    #[error("configuration error: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub task: TaskSpec,
    /// In-context examples; empty for zero-shot.
    pub icl_examples: Vec<CanonicalSmiles>,
    pub temperature: f64,
    pub batch_size: usize,
    pub runs: usize,
    /// Only used by the mock backend.
    pub seed: u64,
}

impl GenerationRequest {
    fn check(&self) -> Result<(), GenerationError> {
        if self.batch_size == 0 || self.runs == 0 {
            return Err(GenerationError::Config(
                "batch size and runs must be at least 1".into(),
            ));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(GenerationError::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// Where generations come from.
pub enum Backend {
    Mock {
        pool: Vec<CanonicalSmiles>,
        config: MockConfig,
    },
    Remote(RemoteGenerator),
}

impl Backend {
    /// Stable description recorded in run manifests.
    pub fn identity(&self) -> String {
        match self {
            Backend::Mock { pool, config } => format!(
                "mock(pool={}, p_junk={}, p_dup={}, p_extend={}, wrap={})",
                pool.len(),
                config.p_junk,
                config.p_dup,
                config.p_extend,
                config.wrap
            ),
            Backend::Remote(r) => format!("remote(model={})", r.model),
        }
    }
}

/// Parse state of one extracted string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum ItemStatus {
    /// Nothing could be extracted from the reply.
    Empty,
    ParseError(String),
    Invalid(String),
    Valid,
}

/// One generated molecule, end to end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    pub raw: String,
    pub extracted: Option<String>,
    pub stage: Option<ExtractionStage>,
    pub status: ItemStatus,
    pub canonical: Option<CanonicalSmiles>,
    #[serde(default)]
    pub retries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend_error: Option<String>,
    /// Score per task property; filled in after oracle scoring.
    #[serde(default)]
    pub scores: BTreeMap<String, Option<f64>>,
    #[serde(default)]
    pub success: bool,
    #[serde(default)]
    pub novel: bool,
}

impl BatchItem {
    /// Extracts, parses and validates a raw reply.
    pub fn from_raw(raw: String) -> BatchItem {
        let extraction = extract_smiles(&raw);
        let (status, canonical) = match &extraction.smiles {
            None => (ItemStatus::Empty, None),
            Some(s) => match parse_smiles(s) {
                Err(e) => (ItemStatus::ParseError(e.to_string()), None),
                Ok(mol) => {
                    let verdict = validate(&mol);
                    if verdict.is_valid() {
                        (ItemStatus::Valid, Some(canonicalize(&mol)))
                    } else {
                        (ItemStatus::Invalid(verdict.to_string()), None)
                    }
                }
            },
        };
        BatchItem {
            raw,
            extracted: extraction.smiles,
            stage: extraction.stage,
            status,
            canonical,
            retries: 0,
            backend_error: None,
            scores: BTreeMap::new(),
            success: false,
            novel: false,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.status == ItemStatus::Valid
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationBatch {
    pub task: String,
    pub run: usize,
    pub prompt: Prompt,
    pub temperature: f64,
    pub items: Vec<BatchItem>,
}

/// Collects `runs x batch_size` replies. Every slot yields exactly one item;
/// failed remote requests become empty items carrying their retry count.
pub fn generate(
    req: &GenerationRequest,
    backend: &Backend,
) -> Result<Vec<GenerationBatch>, GenerationError> {
    req.check()?;
    let prompt = build_prompt(&req.task, &req.icl_examples)?;
    let mut batches = Vec::with_capacity(req.runs);
    for run in 0..req.runs {
        let items: Vec<BatchItem> = match backend {
            Backend::Mock { pool, config } => mock_generate(
                pool,
                config,
                req.seed,
                &req.task,
                run,
                req.batch_size,
                req.temperature,
            )?
            .into_iter()
            .map(BatchItem::from_raw)
            .collect(),
            Backend::Remote(gen) => {
                let request = gen.request(&prompt, req.temperature);
                let slots = run_slots(
                    gen.transport.as_ref(),
                    &request,
                    req.batch_size,
                    gen.workers,
                    gen.max_retries,
                    gen.backoff,
                )
                .map_err(|e| GenerationError::BackendAuth(e.to_string()))?;
                if slots.iter().all(|s| s.error.is_some()) {
                    let last_error = slots
                        .last()
                        .and_then(|s| s.error.clone())
                        .unwrap_or_default();
                    return Err(GenerationError::BackendExhausted {
                        task: req.task.name.clone(),
                        run,
                        last_error,
                    });
                }
                slots
                    .into_iter()
                    .map(|s| {
                        let mut item = BatchItem::from_raw(s.text);
                        item.retries = s.retries;
                        item.backend_error = s.error;
                        item
                    })
                    .collect()
            }
        };
        batches.push(GenerationBatch {
            task: req.task.name.clone(),
            run,
            prompt: prompt.clone(),
            temperature: req.temperature,
            items,
        });
    }
    Ok(batches)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool() -> Vec<CanonicalSmiles> {
        ["CCO", "c1ccccc1", "CC(=O)O", "CCN"]
            .iter()
            .map(|s| crate::chem::canonical_if_valid(s).unwrap())
            .collect()
    }

    fn request(task: &str, runs: usize, batch: usize) -> GenerationRequest {
        GenerationRequest {
            task: TaskRegistry::builtin().get(task).unwrap().clone(),
            icl_examples: vec![],
            temperature: 1.0,
            batch_size: batch,
            runs,
            seed: 7,
        }
    }

    #[test]
    fn mock_is_deterministic() {
        let backend = Backend::Mock {
            pool: pool(),
            config: MockConfig::default(),
        };
        let a = generate(&request("small", 2, 5), &backend).unwrap();
        let b = generate(&request("small", 2, 5), &backend).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.iter().map(|b| b.items.len()).sum::<usize>(), 10);
        assert_ne!(a[0].items, a[1].items);
    }

    #[test]
    fn junk_and_dup_extremes() {
        let junk = MockConfig {
            p_junk: 1.0,
            ..MockConfig::default()
        };
        let backend = Backend::Mock {
            pool: pool(),
            config: junk,
        };
        let batches = generate(&request("small", 1, 50), &backend).unwrap();
        assert!(batches[0].items.iter().all(|i| !i.is_valid()));

        let dup = MockConfig {
            p_junk: 0.0,
            p_dup: 1.0,
            ..MockConfig::default()
        };
        let backend = Backend::Mock {
            pool: pool(),
            config: dup,
        };
        let batches = generate(&request("small", 1, 50), &backend).unwrap();
        let distinct: std::collections::BTreeSet<_> = batches[0]
            .items
            .iter()
            .filter_map(|i| i.canonical.clone())
            .collect();
        assert_eq!(distinct.len(), 1);
    }

    #[test]
    fn prompt_examples() {
        let reg = TaskRegistry::builtin();
        let p = build_prompt(reg.get("qed").unwrap(), &[]).unwrap();
        assert_eq!(p.user, "The molecule has a high QED score.");
        let p = build_prompt(reg.get("logp_3").unwrap(), &[]).unwrap();
        assert!(p.user.contains("The molecule has a LogP value of 3."));
        let p = build_prompt(reg.get("logp_m1").unwrap(), &pool()[..2]).unwrap();
        assert!(p.user.ends_with("The molecule has a LogP value of -1."));
        assert!(p.user.starts_with("Here are some example molecules:\n"));
        let p = build_prompt(reg.get("bbb_qed").unwrap(), &[]).unwrap();
        assert_eq!(
            p.user,
            "The molecule can pass through the blood-brain barrier. The molecule has a high QED score."
        );
    }

    #[test]
    fn empty_pool_is_error() {
        let backend = Backend::Mock {
            pool: vec![],
            config: MockConfig::default(),
        };
        assert_eq!(
            generate(&request("small", 1, 1), &backend),
            Err(GenerationError::EmptyPool)
        );
    }
}
