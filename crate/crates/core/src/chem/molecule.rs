use serde::{Deserialize, Serialize};

use super::element::Element;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's valence. Aromatic bonds count as single
    /// until kekulization assigns the extra pi bond.
    pub fn valence_contribution(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

/// Cis/trans direction mark; parsed and carried, never interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StereoMark {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub formal_charge: i8,
    pub isotope: Option<u16>,
    /// Hydrogen count written inside a bracket atom.
    pub explicit_h: Option<u8>,
    /// Hydrogens implied by the organic-subset valence rules.
    pub implicit_h: u8,
    /// Tetrahedral or other chirality tag, kept verbatim.
    pub chirality: Option<String>,
    /// True when the atom was written in brackets.
    pub bracket: bool,
    pub index: usize,
}

impl Atom {
    pub fn total_h(&self) -> u8 {
        self.explicit_h.unwrap_or(0) + self.implicit_h
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    /// Set when the bond was aromatic as written. Survives kekulization.
    pub aromatic: bool,
    pub stereo_mark: Option<StereoMark>,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }

    /// Bond code used by hashing and canonical ranking:
    /// single=1, double=2, triple=3, aromatic=4.
    pub fn code(&self) -> u8 {
        if self.aromatic {
            return 4;
        }
        match self.order {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

/// Molecular graph built from a SMILES string.
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    /// Per-atom flag: atom lies on at least one cycle.
    pub ring_membership: Vec<bool>,
    /// Per-bond flag: bond lies on at least one cycle.
    pub ring_bonds: Vec<bool>,
    /// Number of connected components; more than one means a dot-separated SMILES.
    pub fragment_count: usize,
    pub kekulized: bool,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Molecule {
    /// Builds a molecule and derives adjacency, ring flags and fragment count.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Molecule {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, bond) in bonds.iter().enumerate() {
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
        }
        let mut mol = Molecule {
            ring_membership: vec![false; atoms.len()],
            ring_bonds: vec![false; bonds.len()],
            fragment_count: 0,
            kekulized: false,
            atoms,
            bonds,
            adjacency,
        };
        mol.ring_bonds = mol.non_bridge_bonds(|_| true);
        for (i, bond) in mol.bonds.iter().enumerate() {
            if mol.ring_bonds[i] {
                mol.ring_membership[bond.a] = true;
                mol.ring_membership[bond.b] = true;
            }
        }
        mol.fragment_count = mol.components().len();
        mol
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// `(neighbor, bond index)` pairs for an atom.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .iter()
            .find(|(n, _)| *n == b)
            .map(|&(_, i)| i)
    }

    pub fn is_multi_fragment(&self) -> bool {
        self.fragment_count > 1
    }

    /// Sum of bond valence contributions on an atom.
    pub fn bond_order_sum(&self, atom: usize) -> u8 {
        self.adjacency[atom]
            .iter()
            .map(|&(_, b)| self.bonds[b].order.valence_contribution())
            .sum()
    }

    /// Connected components as sorted atom index lists, ordered by first atom.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.atoms.len()];
        let mut out = Vec::new();
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(a) = stack.pop() {
                comp.push(a);
                for &(n, _) in &self.adjacency[a] {
                    if !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Cyclomatic number: independent ring count of the graph.
    pub fn ring_count(&self) -> usize {
        (self.bonds.len() + self.fragment_count).saturating_sub(self.atoms.len())
    }

    /// Flags bonds that lie on a cycle within the subgraph of bonds accepted
    /// by `include` (i.e. bonds that are not bridges of that subgraph).
    pub fn non_bridge_bonds(&self, include: impl Fn(&Bond) -> bool) -> Vec<bool> {
        let n = self.atoms.len();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut is_bridge = vec![false; self.bonds.len()];
        let included: Vec<bool> = self.bonds.iter().map(&include).collect();
        let mut timer = 0;
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            // (atom, parent bond, next neighbor position)
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            while let Some(frame) = stack.last_mut() {
                let (u, parent_bond, pos) = *frame;
                if pos < self.adjacency[u].len() {
                    frame.2 += 1;
                    let (v, b) = self.adjacency[u][pos];
                    if !included[b] || b == parent_bond {
                        continue;
                    }
                    if disc[v] == usize::MAX {
                        disc[v] = timer;
                        low[v] = timer;
                        timer += 1;
                        stack.push((v, b, 0));
                    } else {
                        low[u] = low[u].min(disc[v]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[u]);
                        if low[u] > disc[p] {
                            is_bridge[parent_bond] = true;
                        }
                    }
                }
            }
        }
        (0..self.bonds.len())
            .map(|i| included[i] && !is_bridge[i])
            .collect()
    }
}
