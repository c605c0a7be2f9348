//! Reference corpora for novelty checks and activity datasets for ICL pools.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::{canonical_if_valid, CanonicalSmiles};

#[derive(Debug, Error)]
pub enum RefsetError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

/// Set of canonical molecules, each tagged with the corpora it came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceIndex {
    members: BTreeMap<CanonicalSmiles, BTreeSet<String>>,
    /// Lines skipped as unparsable or invalid, summed over all loaded files.
    pub warnings: usize,
}

impl ReferenceIndex {
    pub fn new() -> ReferenceIndex {
        ReferenceIndex::default()
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, m: &CanonicalSmiles) -> bool {
        self.members.contains_key(m)
    }

    /// Corpora that list `m`; empty when absent.
    pub fn source_tags(&self, m: &CanonicalSmiles) -> impl Iterator<Item = &str> {
        self.members
            .get(m)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    /// Every corpus name seen at least once.
    pub fn corpora(&self) -> BTreeSet<&str> {
        self.members
            .values()
            .flatten()
            .map(String::as_str)
            .collect()
    }

    pub fn insert(&mut self, m: CanonicalSmiles, tag: &str) {
        self.members.entry(m).or_default().insert(tag.to_string());
    }

    pub fn iter(&self) -> impl Iterator<Item = &CanonicalSmiles> {
        self.members.keys()
    }

    /// Builds an index from in-memory SMILES under one tag. Invalid entries
    /// count as warnings.
    pub fn from_smiles<'a>(tag: &str, smiles: impl IntoIterator<Item = &'a str>) -> ReferenceIndex {
        let mut idx = ReferenceIndex::new();
        for s in smiles {
            match canonical_if_valid(s) {
                Some(c) => idx.insert(c, tag),
                None => idx.warnings += 1,
            }
        }
        idx
    }
}

/// Corpus name derived from a file name: `zinc250k.txt.gz` -> `zinc250k`.
pub fn corpus_tag(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = name.strip_suffix(".gz").unwrap_or(&name);
    match name.split_once('.') {
        Some((stem, _)) if !stem.is_empty() => stem.to_string(),
        _ => name.to_string(),
    }
}

fn open_lines(path: &Path) -> Result<Vec<String>, RefsetError> {
    let io_err = |source| RefsetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    BufReader::new(reader)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(io_err)
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == '\t' || c == ',' || c.is_whitespace())
        .filter(|f| !f.is_empty())
}

fn is_header(line: &str) -> bool {
    fields(line)
        .next()
        .is_some_and(|f| f.to_ascii_lowercase().contains("smiles"))
}

/// Meaningful lines of a reference/activity file: blank lines, `#`
/// comments and a leading header are dropped.
fn data_lines(lines: &[String]) -> impl Iterator<Item = (usize, &str)> {
    let mut first = true;
    lines.iter().enumerate().filter_map(move |(i, l)| {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            return None;
        }
        let header = first && is_header(l);
        first = false;
        (!header).then_some((i + 1, l))
    })
}

/// Loads `SMILES[\tactivity]` files (optionally gzipped) into one index.
///
/// Each file's tag is its [`corpus_tag`]. A file with no usable line is a
/// format error; bad lines in otherwise good files only bump `warnings`.
pub fn load_reference<P: AsRef<Path>>(paths: &[P]) -> Result<ReferenceIndex, RefsetError> {
    let mut idx = ReferenceIndex::new();
    for path in paths {
        let path = path.as_ref();
        let tag = corpus_tag(path);
        let lines = open_lines(path)?;
        let mut kept = 0usize;
        for (_, line) in data_lines(&lines) {
            match fields(line).next().and_then(canonical_if_valid) {
                Some(c) => {
                    idx.insert(c, &tag);
                    kept += 1;
                }
                None => idx.warnings += 1,
            }
        }
        if kept == 0 {
            return Err(RefsetError::Format {
                path: path.to_path_buf(),
                reason: "no parsable SMILES line".into(),
            });
        }
        log::info!("loaded {kept} reference molecules from {}", path.display());
    }
    Ok(idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Drd2,
    Jnk3,
    Gsk3b,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Drd2, Target::Jnk3, Target::Gsk3b];

    pub fn name(self) -> &'static str {
        match self {
            Target::Drd2 => "drd2",
            Target::Jnk3 => "jnk3",
            Target::Gsk3b => "gsk3b",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown target {0:?} (expected drd2, jnk3 or gsk3b)")]
pub struct UnknownTarget(pub String);

impl FromStr for Target {
    type Err = UnknownTarget;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "drd2" => Ok(Target::Drd2),
            "jnk3" => Ok(Target::Jnk3),
            "gsk3b" | "gsk3β" | "gsk3beta" => Ok(Target::Gsk3b),
            _ => Err(UnknownTarget(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityRecord {
    pub smiles: CanonicalSmiles,
    pub activity: f64,
    pub target: Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityLoad {
    pub records: Vec<ActivityRecord>,
    pub warnings: usize,
}

/// Reads `SMILES<sep>activity` lines. Lines with a bad molecule or a
/// missing/non-finite activity are skipped and counted.
pub fn load_activity(path: &Path, target: Target) -> Result<ActivityLoad, RefsetError> {
    let lines = open_lines(path)?;
    let parsed = parse_activity_lines(lines.iter().map(String::as_str), target);
    if parsed.records.is_empty() {
        return Err(RefsetError::Format {
            path: path.to_path_buf(),
            reason: "no usable activity record".into(),
        });
    }
    Ok(parsed)
}

/// Parses activity lines already in memory. Never fails; see [`load_activity`].
pub fn parse_activity_lines<'a>(
    lines: impl IntoIterator<Item = &'a str>,
    target: Target,
) -> ActivityLoad {
    let owned: Vec<String> = lines.into_iter().map(str::to_string).collect();
    let mut out = ActivityLoad {
        records: Vec::new(),
        warnings: 0,
    };
    for (_, line) in data_lines(&owned) {
        let mut f = fields(line);
        let smiles = f.next().and_then(canonical_if_valid);
        let activity = f
            .next()
            .and_then(|a| a.parse::<f64>().ok())
            .filter(|a| a.is_finite());
        match (smiles, activity) {
            (Some(smiles), Some(activity)) => out.records.push(ActivityRecord {
                smiles,
                activity,
                target,
            }),
            _ => out.warnings += 1,
        }
    }
    out
}
