mod common;

use common::oracles::brute_force_matchable;

use molcreativity::chem::{
    canonicalize, kekulize, needs_pi_bond, parse_smiles, validate, write_smiles, BondOrder,
    KekulizationError, Molecule, ParseErrorKind,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_rewriting(mol: &Molecule, rng: &mut ChaCha8Rng) -> String {
    let mut ranks: Vec<usize> = (0..mol.atom_count()).collect();
    ranks.shuffle(rng);
    write_smiles(mol, &ranks)
}

#[test]
fn parse_examples() {
    let m = parse_smiles("C").unwrap();
    assert_eq!(
        (m.atom_count(), m.bonds.len(), m.atoms[0].total_h()),
        (1, 0, 4)
    );

    let benzene = parse_smiles("c1ccccc1").unwrap();
    assert_eq!(benzene.atom_count(), 6);
    assert_eq!(benzene.bonds.len(), 6);
    assert!(benzene.atoms.iter().all(|a| a.aromatic));
    assert_eq!(benzene.ring_count(), 1);
}

#[test]
fn parse_error_kinds_and_offsets() {
    let cases = [
        ("C1CC", ParseErrorKind::UnclosedRing, 1),
        ("", ParseErrorKind::EmptyInput, 0),
        ("   ", ParseErrorKind::EmptyInput, 0),
        ("CC(C", ParseErrorKind::UnclosedBranch, 2),
        ("CC)", ParseErrorKind::BadToken, 2),
        ("CC=", ParseErrorKind::DanglingBond, 2),
        ("CX", ParseErrorKind::BadToken, 1),
        ("C[Zz]", ParseErrorKind::BadToken, 1),
    ];
    for (text, kind, offset) in cases {
        let err = parse_smiles(text).unwrap_err();
        assert_eq!((err.kind, err.offset), (kind, offset), "{text:?}");
    }
}

#[test]
fn validity_examples() {
    assert_eq!(
        validate(&parse_smiles("O=C=O").unwrap()).to_string(),
        "valid"
    );
    assert_eq!(
        validate(&parse_smiles("C(C)(C)(C)(C)C").unwrap()).to_string(),
        "invalid: ValenceExceeded@0"
    );
    assert_eq!(
        validate(&parse_smiles("c1ccc1").unwrap()).to_string(),
        "invalid: KekulizationFailed"
    );
    assert_eq!(
        validate(&parse_smiles("[NH4+]").unwrap()).to_string(),
        "valid"
    );
    assert!(!validate(&parse_smiles("FCl(F)").unwrap()).is_valid());
}

#[test]
fn kekulize_examples() {
    for s in [
        "c1ccccc1",
        "c1ccncc1",
        "c1ccc2ccccc2c1",
        "c1c[nH]cn1",
        "c1ccoc1",
        "c1ccsc1",
    ] {
        let k = kekulize(&parse_smiles(s).unwrap()).unwrap_or_else(|e| panic!("{s}: {e}"));
        assert!(k.kekulized);
        assert!(k.bonds.iter().all(|b| b.order != BondOrder::Aromatic));
    }
    let k = kekulize(&parse_smiles("c1ccccc1").unwrap()).unwrap();
    assert_eq!(
        k.bonds
            .iter()
            .filter(|b| b.order == BondOrder::Double)
            .count(),
        3
    );
    assert_eq!(
        k.bonds
            .iter()
            .filter(|b| b.order == BondOrder::Single)
            .count(),
        3
    );
    assert!(matches!(
        kekulize(&parse_smiles("c1ccc1").unwrap()),
        Err(KekulizationError::FourMemberedRing(_))
    ));
    assert!(matches!(
        kekulize(&parse_smiles("c1cccc1").unwrap()),
        Err(KekulizationError::Unmatched(_))
    ));
}

#[test]
fn fixture_is_valid_and_distinct() {
    let mols = common::druglike_molecules();
    assert_eq!(mols.len(), 200);
    let mut seen = std::collections::HashSet::new();
    for (mol, (s, name)) in mols.iter().zip(common::druglike()) {
        assert!(validate(mol).is_valid(), "{name} {s}: {}", validate(mol));
        assert!(
            seen.insert(canonicalize(mol)),
            "{name} duplicates an earlier entry"
        );
    }
}

#[test]
fn fixture_rewritings_share_canonical_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (mol, (s, _)) in common::druglike_molecules().iter().zip(common::druglike()) {
        let canon = canonicalize(mol);
        for _ in 0..20 {
            let rewritten = random_rewriting(mol, &mut rng);
            let again =
                parse_smiles(&rewritten).unwrap_or_else(|e| panic!("{s} -> {rewritten}: {e}"));
            assert_eq!(canonicalize(&again), canon, "{s} rewritten as {rewritten}");
        }
        let reparsed = canon.parse().unwrap();
        assert_eq!(canonicalize(&reparsed), canon, "not idempotent on {s}");
    }
}

#[test]
fn kekulization_matches_brute_force() {
    let extra = [
        "c1cccc1",
        "c1ccc[nH]1",
        "c1cc[nH]cc1",
        "c1ccc2cc3ccccc3cc2c1",
        "o1cccc1",
        "c1cnc[nH]1",
    ];
    let mut mols = common::druglike_molecules();
    mols.extend(extra.iter().map(|s| parse_smiles(s).unwrap()));
    for mol in &mols {
        if !mol.atoms.iter().any(|a| a.aromatic) {
            continue;
        }
        let k = kekulize(mol);
        assert_eq!(
            k.is_ok(),
            brute_force_matchable(mol),
            "{}",
            canonicalize(mol)
        );
        if let Ok(k) = k {
            for i in 0..mol.atom_count() {
                let doubles = k
                    .neighbors(i)
                    .iter()
                    .filter(|&&(_, b)| {
                        mol.bonds[b].order == BondOrder::Aromatic
                            && k.bonds[b].order == BondOrder::Double
                    })
                    .count();
                assert_eq!(doubles, usize::from(needs_pi_bond(mol, i)));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonical_form_is_order_independent(idx in 0usize..200, seed in any::<u64>()) {
        let mols = common::druglike_molecules();
        let mol = &mols[idx];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rewritten = random_rewriting(mol, &mut rng);
        prop_assert_eq!(canonicalize(&parse_smiles(&rewritten).unwrap()), canonicalize(mol));
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..40)) {
        let text = String::from_utf8_lossy(&bytes);
        if let Ok(mol) = parse_smiles(&text) {
            let verdict = validate(&mol);
            if verdict.is_valid() {
                let canon = canonicalize(&mol);
                prop_assert_eq!(canonicalize(&canon.parse().unwrap()), canon);
            }
        }
    }

    #[test]
    fn smiles_alphabet_never_panics(text in "[CNOcnos()=#1-3\\[\\]H+\\-@.%0-9]{0,30}") {
        if let Ok(mol) = parse_smiles(&text) {
            let _ = validate(&mol).to_string();
        }
    }
}
