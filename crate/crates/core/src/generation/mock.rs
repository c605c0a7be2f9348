//! Seeded offline generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::task::TaskSpec;
use super::GenerationError;
use crate::chem::CanonicalSmiles;

/// Knobs of the mock generator. Probabilities are given at temperature 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockConfig {
    /// Chance an output is corrupted so it cannot parse.
    #[serde(default = "default_p_junk")]
    pub p_junk: f64,
    /// Chance an output repeats an earlier pick of the same batch.
    #[serde(default = "default_p_dup")]
    pub p_dup: f64,
    /// Chance a fresh pick gets an extra carbon appended, usually making it
    /// absent from the reference pool.
    #[serde(default = "default_p_extend")]
    pub p_extend: f64,
    /// Wrap outputs in chatty reply templates.
    #[serde(default = "default_wrap")]
    pub wrap: bool,
}

fn default_p_junk() -> f64 {
    0.1
}
fn default_p_dup() -> f64 {
    0.1
}
fn default_p_extend() -> f64 {
    0.5
}
fn default_wrap() -> bool {
    true
}

impl Default for MockConfig {
    fn default() -> Self {
        MockConfig {
            p_junk: default_p_junk(),
            p_dup: default_p_dup(),
            p_extend: default_p_extend(),
            wrap: true,
        }
    }
}

const TEMPLATES: [&str; 5] = [
    "{}",
    "SMILES: {}",
    "Here is a molecule that fits: `{}`",
    "```smiles\n{}\n```",
    "Sure! The molecule {} satisfies the request.",
];

/// Temperature reshapes a probability: hotter sampling corrupts more often
/// and repeats less often. `p` of 0 or 1 is left unchanged.
fn at_temperature(p: f64, exponent: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    1.0 - (1.0 - p).powf(exponent)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stream seed for one (seed, task, run) triple.
pub fn stream_seed(seed: u64, task: &str, run: usize) -> u64 {
    seed ^ fnv1a(task.as_bytes()).rotate_left(17) ^ (run as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn corrupt(s: &str, rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..3) {
        0 => format!("{s}("),
        1 => format!("){s}"),
        _ => format!("{s}="),
    }
}

/// Raw replies for one batch. Deterministic in all arguments.
pub fn mock_generate(
    pool: &[CanonicalSmiles],
    config: &MockConfig,
    seed: u64,
    task: &TaskSpec,
    run: usize,
    batch_size: usize,
    temperature: f64,
) -> Result<Vec<String>, GenerationError> {
    if pool.is_empty() {
        return Err(GenerationError::EmptyPool);
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(GenerationError::Config(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let p_junk = at_temperature(config.p_junk, temperature);
    let p_dup = at_temperature(config.p_dup, 1.0 / temperature);
    let p_extend = at_temperature(config.p_extend, temperature);
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, &task.name, run));
    let mut picks: Vec<String> = Vec::with_capacity(batch_size);
    let mut out = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        let pick = if !picks.is_empty() && rng.random_bool(p_dup) {
            picks[rng.random_range(0..picks.len())].clone()
        } else {
            let base = pool[rng.random_range(0..pool.len())].as_str();
            if rng.random_bool(p_extend) {
                format!("{base}C")
            } else {
                base.to_string()
            }
        };
        picks.push(pick.clone());
        let text = if rng.random_bool(p_junk) {
            corrupt(&pick, &mut rng)
        } else {
            pick
        };
        let template = if config.wrap {
            TEMPLATES[rng.random_range(0..TEMPLATES.len())]
        } else {
            "{}"
        };
        out.push(template.replacen("{}", &text, 1));
    }
    Ok(out)
}
