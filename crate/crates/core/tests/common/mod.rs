#![allow(dead_code)]

use std::path::PathBuf;

use molcreativity::chem::{parse_smiles, Molecule};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

/// The drug-like fixture: (SMILES, name) pairs.
pub fn druglike() -> Vec<(String, String)> {
    let text = std::fs::read_to_string(fixture("druglike.smi")).expect("fixture readable");
    text.lines()
        .skip(1)
        .map(|l| {
            let (s, n) = l.split_once('\t').expect("two columns");
            (s.to_string(), n.to_string())
        })
        .collect()
}

pub fn druglike_molecules() -> Vec<Molecule> {
    druglike()
        .iter()
        .map(|(s, _)| parse_smiles(s).expect("fixture parses"))
        .collect()
}
pub mod oracles;
