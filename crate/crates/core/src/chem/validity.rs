//! Kekulization and valence checking.

use std::fmt;

use thiserror::Error;

use super::matching::maximum_matching;
use super::molecule::{BondOrder, Molecule};
use super::smiles::needs_pi_bond;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KekulizationError {
    /// Aromatic atoms requiring a pi bond that the maximum matching left uncovered.
    #[error("no alternating single/double assignment covers aromatic atoms {0:?}")]
    Unmatched(Vec<usize>),
    /// A four-membered ring of aromatic bonds (antiaromatic; never accepted).
    #[error("four-membered aromatic ring {0:?}")]
    FourMemberedRing([usize; 4]),
}

fn aromatic_four_ring(mol: &Molecule) -> Option<[usize; 4]> {
    let aromatic_nbrs = |x: usize| {
        mol.neighbors(x)
            .iter()
            .filter(|&&(_, b)| mol.bonds[b].order == BondOrder::Aromatic)
            .map(|&(n, _)| n)
    };
    for bond in mol.bonds.iter().filter(|b| b.order == BondOrder::Aromatic) {
        let (a, b) = (bond.a, bond.b);
        for c in aromatic_nbrs(b).filter(|&c| c != a) {
            for d in aromatic_nbrs(c).filter(|&d| d != b && d != a) {
                if aromatic_nbrs(d).any(|x| x == a) {
                    return Some([a, b, c, d]);
                }
            }
        }
    }
    None
}

/// Replaces aromatic bonds by an alternating single/double assignment.
///
/// Atoms needing a pi bond are matched pairwise along aromatic bonds; a
/// perfect matching on that subgraph is required. Aromatic flags on atoms
/// and bonds are kept. Four-membered aromatic rings are rejected outright
/// even though a 4-cycle has a perfect matching.
pub fn kekulize(mol: &Molecule) -> Result<Molecule, KekulizationError> {
    if let Some(ring) = aromatic_four_ring(mol) {
        return Err(KekulizationError::FourMemberedRing(ring));
    }
    let demand: Vec<bool> = (0..mol.atom_count())
        .map(|i| needs_pi_bond(mol, i))
        .collect();
    let mut adjacency = vec![Vec::new(); mol.atom_count()];
    for bond in &mol.bonds {
        if bond.order == BondOrder::Aromatic && demand[bond.a] && demand[bond.b] {
            adjacency[bond.a].push(bond.b);
            adjacency[bond.b].push(bond.a);
        }
    }
    let mate = maximum_matching(mol.atom_count(), &adjacency);
    let unmatched: Vec<usize> = (0..mol.atom_count())
        .filter(|&i| demand[i] && mate[i].is_none())
        .collect();
    if !unmatched.is_empty() {
        return Err(KekulizationError::Unmatched(unmatched));
    }
    let mut out = mol.clone();
    for bond in out.bonds.iter_mut() {
        if bond.order == BondOrder::Aromatic {
            bond.order = if mate[bond.a] == Some(bond.b) {
                BondOrder::Double
            } else {
                BondOrder::Single
            };
        }
    }
    out.kekulized = true;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvalidReason {
    ValenceExceeded {
        atom: usize,
    },
    KekulizationFailed,
    /// Aromatic atom that does not sit on a cycle of aromatic bonds.
    NonRingAromatic {
        atom: usize,
    },
    /// Aromatic bond with an aliphatic endpoint.
    AromaticBondMismatch {
        bond: usize,
    },
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidReason::ValenceExceeded { atom } => write!(f, "ValenceExceeded@{atom}"),
            InvalidReason::KekulizationFailed => f.write_str("KekulizationFailed"),
            InvalidReason::NonRingAromatic { atom } => write!(f, "NonRingAromatic@{atom}"),
            InvalidReason::AromaticBondMismatch { bond } => {
                write!(f, "AromaticBondMismatch@{bond}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityVerdict {
    pub reasons: Vec<InvalidReason>,
}

impl ValidityVerdict {
    pub fn is_valid(&self) -> bool {
        self.reasons.is_empty()
    }
}

impl fmt::Display for ValidityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("valid");
        }
        f.write_str("invalid: ")?;
        for (i, r) in self.reasons.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Checks valence and aromaticity of a parsed molecule.
pub fn validate(mol: &Molecule) -> ValidityVerdict {
    let mut reasons = Vec::new();

    for (i, bond) in mol.bonds.iter().enumerate() {
        if bond.order == BondOrder::Aromatic
            && !(mol.atoms[bond.a].aromatic && mol.atoms[bond.b].aromatic)
        {
            reasons.push(InvalidReason::AromaticBondMismatch { bond: i });
        }
    }
    let aromatic_cycle_bonds = mol.non_bridge_bonds(|b| b.order == BondOrder::Aromatic);
    let mut on_aromatic_cycle = vec![false; mol.atom_count()];
    for (i, bond) in mol.bonds.iter().enumerate() {
        if aromatic_cycle_bonds[i] {
            on_aromatic_cycle[bond.a] = true;
            on_aromatic_cycle[bond.b] = true;
        }
    }
    for (i, atom) in mol.atoms.iter().enumerate() {
        if atom.aromatic && !on_aromatic_cycle[i] {
            reasons.push(InvalidReason::NonRingAromatic { atom: i });
        }
    }

    let checked = match kekulize(mol) {
        Ok(k) => k,
        Err(_) => {
            reasons.push(InvalidReason::KekulizationFailed);
            mol.clone()
        }
    };
    for (i, atom) in checked.atoms.iter().enumerate() {
        let total = checked.bond_order_sum(i) as u16 + atom.total_h() as u16;
        let max = *atom
            .element
            .allowed_valences(atom.formal_charge)
            .last()
            .expect("non-empty valence list");
        if total > max as u16 {
            reasons.push(InvalidReason::ValenceExceeded { atom: i });
        }
    }
    reasons.sort_by_key(|r| match r {
        InvalidReason::ValenceExceeded { atom } => (0, *atom),
        InvalidReason::KekulizationFailed => (1, 0),
        InvalidReason::NonRingAromatic { atom } => (2, *atom),
        InvalidReason::AromaticBondMismatch { bond } => (3, *bond),
    });
    ValidityVerdict { reasons }
}
