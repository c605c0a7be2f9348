#![no_main]

use libfuzzer_sys::fuzz_target;
use molcreativity::chem::{canonicalize, parse_smiles, validate};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(mol) = parse_smiles(text) else { return };
    if validate(&mol).is_valid() {
        let canon = canonicalize(&mol);
        let again = canon.parse().expect("canonical output parses");
        assert_eq!(canonicalize(&again), canon);
    }
});
