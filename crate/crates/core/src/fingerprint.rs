//! Circular (Morgan-style) fingerprints and Tanimoto similarity.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::chem::Molecule;

pub const DEFAULT_RADIUS: usize = 3;
pub const DEFAULT_WIDTH: usize = 2048;

const HASH_SEED: u64 = 0x243f_6a88_85a3_08d3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FingerprintError {
    #[error("fingerprint width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
    #[error("bad fingerprint hex: {0}")]
    BadHex(String),
}

/// Fixed-width bit vector.
///
/// Equality and hashing look at the bits only; `n_identifiers` is
/// bookkeeping from construction.
#[derive(Debug, Clone)]
pub struct Fingerprint {
    words: Vec<u64>,
    width: usize,
    /// Distinct environment identifiers before folding. For fingerprints
    /// decoded from hex this is the popcount.
    pub n_identifiers: usize,
}

impl PartialEq for Fingerprint {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width && self.words == other.words
    }
}

impl Eq for Fingerprint {}

impl std::hash::Hash for Fingerprint {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.width.hash(state);
        self.words.hash(state);
    }
}

impl Fingerprint {
    pub fn zeros(width: usize) -> Fingerprint {
        Fingerprint {
            words: vec![0; width.div_ceil(64)],
            width,
            n_identifiers: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn set(&mut self, bit: usize) {
        assert!(
            bit < self.width,
            "bit {bit} out of range for width {}",
            self.width
        );
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        bit < self.width && self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(|&b| self.get(b))
    }

    /// Lowercase hex, byte `k` holding bits `8k..8k+8` with the lowest bit first.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = (0..self.width.div_ceil(8))
            .map(|k| (self.words[k / 8] >> ((k % 8) * 8)) as u8)
            .collect();
        hex::encode(bytes)
    }

    pub fn from_hex(text: &str, width: usize) -> Result<Fingerprint, FingerprintError> {
        let bytes =
            hex::decode(text.trim()).map_err(|e| FingerprintError::BadHex(e.to_string()))?;
        if bytes.len() != width.div_ceil(8) {
            return Err(FingerprintError::BadHex(format!(
                "expected {} bytes, got {}",
                width.div_ceil(8),
                bytes.len()
            )));
        }
        let mut fp = Fingerprint::zeros(width);
        for (k, byte) in bytes.iter().enumerate() {
            for bit in 0..8 {
                if byte >> bit & 1 == 1 {
                    let idx = k * 8 + bit;
                    if idx >= width {
                        return Err(FingerprintError::BadHex(format!(
                            "bit {idx} beyond width {width}"
                        )));
                    }
                    fp.set(idx);
                }
            }
        }
        fp.n_identifiers = fp.popcount();
        Ok(fp)
    }

    fn check_width(&self, other: &Fingerprint) -> Result<(), FingerprintError> {
        if self.width != other.width {
            return Err(FingerprintError::WidthMismatch {
                left: self.width,
                right: other.width,
            });
        }
        Ok(())
    }
}

/// Tanimoto coefficient |a AND b| / |a OR b|; two empty fingerprints score 1.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    a.check_width(b)?;
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(f64::from(inter) / f64::from(union))
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_words(words: &[u64]) -> u64 {
    let mut h = HASH_SEED;
    for &w in words {
        h = mix(h ^ mix(w.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn initial_identifier(mol: &Molecule, atom: usize) -> u64 {
    let a = &mol.atoms[atom];
    hash_words(&[
        u64::from(a.element.atomic_number()),
        mol.degree(atom) as u64,
        a.formal_charge as i64 as u64,
        u64::from(a.total_h()),
        u64::from(mol.ring_membership[atom]),
        u64::from(a.aromatic),
    ])
}

/// Unique environment identifiers up to `radius`, before folding.
///
/// An atom contributes a new identifier at iteration `r` only while its
/// neighborhood still grows, so isolated atoms give a single identifier.
pub fn environment_identifiers(mol: &Molecule, radius: usize) -> BTreeSet<u64> {
    let n = mol.atom_count();
    let mut ids: Vec<u64> = (0..n).map(|a| initial_identifier(mol, a)).collect();
    let mut out: BTreeSet<u64> = ids.iter().copied().collect();
    // bonds covered by each atom's environment so far
    let mut covered: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for _ in 0..radius {
        let mut next_ids = ids.clone();
        let mut next_cov = covered.clone();
        for a in 0..n {
            let mut cov = covered[a].clone();
            for &(nbr, b) in mol.neighbors(a) {
                cov.insert(b);
                cov.extend(covered[nbr].iter().copied());
            }
            let mut nbrs: Vec<(u64, u64)> = mol
                .neighbors(a)
                .iter()
                .map(|&(nbr, b)| (u64::from(mol.bonds[b].code()), ids[nbr]))
                .collect();
            nbrs.sort_unstable();
            let mut words = vec![ids[a]];
            for (code, id) in nbrs {
                words.push(code);
                words.push(id);
            }
            next_ids[a] = hash_words(&words);
            if cov.len() > covered[a].len() {
                out.insert(next_ids[a]);
            }
            next_cov[a] = cov;
        }
        ids = next_ids;
        covered = next_cov;
    }
    out
}

/// Folded circular fingerprint.
pub fn fingerprint(mol: &Molecule, radius: usize, width: usize) -> Fingerprint {
    let mut fp = Fingerprint::zeros(width);
    let ids = environment_identifiers(mol, radius);
    for &id in &ids {
        fp.set((id % width as u64) as usize);
    }
    fp.n_identifiers = ids.len();
    fp
}

/// Fingerprint with the default radius and width.
pub fn default_fingerprint(mol: &Molecule) -> Fingerprint {
    fingerprint(mol, DEFAULT_RADIUS, DEFAULT_WIDTH)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn fp(s: &str) -> Fingerprint {
        default_fingerprint(&parse_smiles(s).unwrap())
    }

    #[test]
    fn identifier_counts() {
        assert_eq!(fp("C").popcount(), 1);
        assert_eq!(
            environment_identifiers(&parse_smiles("CCO").unwrap(), 3).len(),
            8
        );
        let f = fp("CCO");
        assert_eq!(f.n_identifiers, 8);
        assert!(f.popcount() <= f.n_identifiers);
    }

    #[test]
    fn tanimoto_basics() {
        let a = fp("CCO");
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        assert_eq!(
            tanimoto(&Fingerprint::zeros(64), &Fingerprint::zeros(64)).unwrap(),
            1.0
        );
        let s = tanimoto(&a, &fp("c1ccccc1")).unwrap();
        assert!((0.0..1.0).contains(&s));
        assert_eq!(
            tanimoto(&Fingerprint::zeros(64), &Fingerprint::zeros(128)),
            Err(FingerprintError::WidthMismatch {
                left: 64,
                right: 128
            })
        );
    }

    #[test]
    fn hex_round_trip() {
        let a = fp("CC(=O)Oc1ccccc1C(=O)O");
        let h = a.to_hex();
        assert_eq!(h.len(), 512);
        assert_eq!(Fingerprint::from_hex(&h, DEFAULT_WIDTH).unwrap(), a);
        let mut one = Fingerprint::zeros(16);
        one.set(0);
        one.set(9);
        assert_eq!(one.to_hex(), "0102");
    }

    #[test]
    fn invariant_to_atom_order() {
        assert_eq!(fp("OCC"), fp("CCO"));
        assert_eq!(fp("c1ccccc1O"), fp("Oc1ccccc1"));
    }
}
