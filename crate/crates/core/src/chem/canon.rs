//! Canonical atom ranking and SMILES emission.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::molecule::{BondOrder, Molecule};
use super::smiles::{implicit_hydrogens, parse_smiles, ParseError};

/// Leaf budget for exhaustive tie-breaking. Past it, remaining ties are
/// broken by the first candidate of each class.
const TIE_BREAK_LEAF_BUDGET: usize = 2048;

/// SMILES string in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalSmiles(String);

impl CanonicalSmiles {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    /// Wraps a string that is already known to be canonical (e.g. read back
    /// from a file this crate wrote). No check is performed.
    pub fn from_canonical_unchecked(text: impl Into<String>) -> Self {
        CanonicalSmiles(text.into())
    }

    pub fn parse(&self) -> Result<Molecule, ParseError> {
        parse_smiles(&self.0)
    }
}

impl fmt::Display for CanonicalSmiles {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for CanonicalSmiles {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Emits the canonical SMILES of a molecule. Stereo marks are dropped.
pub fn canonicalize(mol: &Molecule) -> CanonicalSmiles {
    if mol.atom_count() == 0 {
        return CanonicalSmiles(String::new());
    }
    let initial = dense_rank(&initial_invariants(mol));
    let mut search = TieBreak {
        mol,
        leaves: 0,
        best: None,
    };
    search.run(initial);
    CanonicalSmiles(search.best.expect("at least one leaf"))
}

type Invariant = (u8, usize, i8, u8, bool, bool, u16);
/// (neighbor atom, bond index)
type Edge = (usize, usize);

fn initial_invariants(mol: &Molecule) -> Vec<Invariant> {
    mol.atoms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            (
                a.element.atomic_number(),
                mol.degree(i),
                a.formal_charge,
                a.total_h(),
                mol.ring_membership[i],
                a.aromatic,
                a.isotope.unwrap_or(0),
            )
        })
        .collect()
}

fn dense_rank<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).expect("key present"))
        .collect()
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().copied().max().map_or(0, |m| m + 1)
}

/// Iterative neighbor-rank refinement until the partition stops splitting.
pub fn refine(mol: &Molecule, mut ranks: Vec<usize>) -> Vec<usize> {
    loop {
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..mol.atom_count())
            .map(|a| {
                let mut nbrs: Vec<(usize, u8)> = mol
                    .neighbors(a)
                    .iter()
                    .map(|&(n, b)| (ranks[n], mol.bonds[b].code()))
                    .collect();
                nbrs.sort_unstable();
                (ranks[a], nbrs)
            })
            .collect();
        let next = dense_rank(&keys);
        if class_count(&next) == class_count(&ranks) {
            return next;
        }
        ranks = next;
    }
}

struct TieBreak<'a> {
    mol: &'a Molecule,
    leaves: usize,
    best: Option<String>,
}

impl TieBreak<'_> {
    fn run(&mut self, ranks: Vec<usize>) {
        let ranks = refine(self.mol, ranks);
        let n = ranks.len();
        if class_count(&ranks) == n {
            self.leaves += 1;
            let text = write_smiles(self.mol, &ranks);
            if self.best.as_ref().is_none_or(|b| text < *b) {
                self.best = Some(text);
            }
            return;
        }
        // smallest rank shared by more than one atom
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        let tied = (0..n)
            .find(|&r| counts[r] > 1)
            .expect("a tied class exists");
        let candidates: Vec<usize> = (0..n).filter(|&a| ranks[a] == tied).collect();
        for (i, &pick) in candidates.iter().enumerate() {
            if i > 0 && self.leaves >= TIE_BREAK_LEAF_BUDGET {
                break;
            }
            let split: Vec<usize> = (0..n)
                .map(|a| 2 * ranks[a] + usize::from(ranks[a] == tied && a != pick))
                .collect();
            self.run(dense_rank(&split));
        }
    }
}

fn bond_symbol(mol: &Molecule, bond: usize) -> &'static str {
    let b = &mol.bonds[bond];
    let both_aromatic = mol.atoms[b.a].aromatic && mol.atoms[b.b].aromatic;
    if b.aromatic {
        return if both_aromatic { "" } else { ":" };
    }
    match b.order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic => ":",
    }
}

fn atom_token(mol: &Molecule, i: usize, out: &mut String) {
    let atom = &mol.atoms[i];
    let bare = atom.element.is_organic_subset()
        && atom.isotope.is_none()
        && atom.formal_charge == 0
        && implicit_hydrogens(mol, i) == atom.total_h();
    let symbol = atom.element.symbol();
    let write_symbol = |out: &mut String| {
        if atom.aromatic {
            out.push_str(&symbol.to_ascii_lowercase());
        } else {
            out.push_str(symbol);
        }
    };
    if bare {
        write_symbol(out);
        return;
    }
    out.push('[');
    if let Some(iso) = atom.isotope {
        out.push_str(&iso.to_string());
    }
    write_symbol(out);
    match atom.total_h() {
        0 => {}
        1 => out.push('H'),
        h => {
            out.push('H');
            out.push_str(&h.to_string());
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => out.push_str(&format!("+{c}")),
        c => out.push_str(&format!("-{}", -c)),
    }
    out.push(']');
}

/// Writes a SMILES string for `mol` using `ranks` to order the traversal:
/// each fragment starts at its lowest-ranked atom and neighbors are visited
/// in ascending rank. Any permutation of `0..n` yields a valid spelling of
/// the same graph.
pub fn write_smiles(mol: &Molecule, ranks: &[usize]) -> String {
    let n = mol.atom_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&a| ranks[a]);

    let mut visited = vec![false; n];
    let mut used_bond = vec![false; mol.bonds.len()];
    // per atom: tree children (atom, bond), ring openings and closings (partner, bond)
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut openings: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut closings: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut roots = Vec::new();

    for &root in &order {
        if visited[root] {
            continue;
        }
        roots.push(root);
        visited[root] = true;
        // iterative DFS: (atom, sorted neighbor list, position)
        let mut stack: Vec<(usize, Vec<Edge>, usize)> =
            vec![(root, sorted_neighbors(mol, root, ranks), 0)];
        while let Some(frame) = stack.last_mut() {
            let (u, ref nbrs, pos) = *frame;
            if pos == nbrs.len() {
                stack.pop();
                continue;
            }
            frame.2 += 1;
            let (v, b) = nbrs[pos];
            if used_bond[b] {
                continue;
            }
            used_bond[b] = true;
            if visited[v] {
                openings[v].push((u, b));
                closings[u].push((v, b));
            } else {
                visited[v] = true;
                children[u].push((v, b));
                stack.push((v, sorted_neighbors(mol, v, ranks), 0));
            }
        }
    }

    let mut out = String::new();
    let mut digits_in_use: Vec<bool> = vec![false; 100];
    let mut assigned: Vec<Option<usize>> = vec![None; mol.bonds.len()];
    for (k, &root) in roots.iter().enumerate() {
        if k > 0 {
            out.push('.');
        }
        let mut stack: Vec<Emit> = vec![Emit::Atom(root)];
        while let Some(item) = stack.pop() {
            match item {
                Emit::Text(t) => out.push_str(t),
                Emit::Bond(b) => out.push_str(bond_symbol(mol, b)),
                Emit::Atom(a) => {
                    atom_token(mol, a, &mut out);
                    let mut closes = closings[a].clone();
                    closes.sort_by_key(|&(p, _)| ranks[p]);
                    for (_, b) in closes {
                        let d = assigned[b].expect("ring digit opened earlier");
                        digits_in_use[d] = false;
                        push_ring_digit(&mut out, d);
                    }
                    let mut opens = openings[a].clone();
                    opens.sort_by_key(|&(p, _)| ranks[p]);
                    for (_, b) in opens {
                        let d = (1..100)
                            .find(|&d| !digits_in_use[d])
                            .expect("fewer than 99 open rings");
                        digits_in_use[d] = true;
                        assigned[b] = Some(d);
                        out.push_str(bond_symbol(mol, b));
                        push_ring_digit(&mut out, d);
                    }
                    let kids = &children[a];
                    // pushed in reverse so the first child is emitted first
                    for (i, &(c, b)) in kids.iter().enumerate().rev() {
                        let last = i + 1 == kids.len();
                        if !last {
                            stack.push(Emit::Text(")"));
                        }
                        stack.push(Emit::Atom(c));
                        stack.push(Emit::Bond(b));
                        if !last {
                            stack.push(Emit::Text("("));
                        }
                    }
                }
            }
        }
    }
    out
}

enum Emit {
    Atom(usize),
    Bond(usize),
    Text(&'static str),
}

fn push_ring_digit(out: &mut String, d: usize) {
    if d < 10 {
        out.push(char::from(b'0' + d as u8));
    } else {
        out.push('%');
        out.push_str(&d.to_string());
    }
}

fn sorted_neighbors(mol: &Molecule, atom: usize, ranks: &[usize]) -> Vec<Edge> {
    let mut nbrs = mol.neighbors(atom).to_vec();
    nbrs.sort_by_key(|&(n, _)| ranks[n]);
    nbrs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{parse_smiles, validate};

    fn canon(s: &str) -> String {
        canonicalize(&parse_smiles(s).unwrap()).into_string()
    }

    #[test]
    fn permutation_examples() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("C(O)C"), canon("CCO"));
        assert_eq!(canon("c1ccccc1O"), canon("Oc1ccccc1"));
        assert_eq!(canon("[CH4]"), canon("C"));
        assert_eq!(canon("C1CCCCC1"), "C1CCCCC1");
        assert_ne!(canon("CCO"), canon("COC"));
    }

    #[test]
    fn idempotent_on_tricky_atoms() {
        for s in [
            "c1cc[nH]c1",
            "[13CH3]C(=O)[O-]",
            "C[N+](C)(C)C",
            "[Na+].[Cl-]",
            "O=c1cc[nH]cc1",
            "c1ccccc1-c1ccccc1",
            "[2H]C([2H])([2H])Cl",
            "C1CC2CCC1CC2",
            "[Fe+2]",
            "[H][H]",
        ] {
            let once = canon(s);
            assert!(
                validate(&parse_smiles(&once).unwrap()).is_valid(),
                "{s} -> {once}"
            );
            assert_eq!(canon(&once), once, "{s}");
        }
    }

    #[test]
    fn stereo_is_dropped() {
        assert_eq!(canon("F/C=C/F"), canon("FC=CF"));
        assert_eq!(canon("N[C@@H](C)C(=O)O"), canon("N[C@H](C)C(=O)O"));
    }

    #[test]
    fn writer_round_trips_any_order() {
        let m = parse_smiles("CC(=O)Oc1ccccc1C(=O)O").unwrap();
        let n = m.atom_count();
        let reversed: Vec<usize> = (0..n).rev().collect();
        let s = write_smiles(&m, &reversed);
        assert_eq!(canon(&s), canon("CC(=O)Oc1ccccc1C(=O)O"));
    }
}
