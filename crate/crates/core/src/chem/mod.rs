//! Molecular graph layer: SMILES parsing, validity, canonical form.

mod canon;
mod element;
mod matching;
mod molecule;
mod smiles;
mod validity;

pub use canon::{canonicalize, refine, write_smiles, CanonicalSmiles};
pub use element::Element;
pub use matching::maximum_matching;
pub use molecule::{Atom, Bond, BondOrder, Molecule, StereoMark};
pub use smiles::{
    implicit_hydrogens, lexes_as_smiles, needs_pi_bond, parse_smiles, ParseError, ParseErrorKind,
};
pub use validity::{kekulize, validate, InvalidReason, KekulizationError, ValidityVerdict};

/// Parses, validates and canonicalizes in one step. Returns `None` for
/// unparsable or invalid input.
pub fn canonical_if_valid(text: &str) -> Option<CanonicalSmiles> {
    let mol = parse_smiles(text).ok()?;
    validate(&mol).is_valid().then(|| canonicalize(&mol))
}
