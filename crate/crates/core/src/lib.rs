//! Molecular-generation creativity harness: SMILES handling, fingerprints,
//! creativity metrics, property oracles, generation backends, in-context
//! example selection and the statistics used to analyse runs.

pub mod chem;
pub mod fingerprint;
pub mod generation;
pub mod icl;
pub mod metrics;
pub mod oracle;
pub mod refset;
pub mod stats;
