#![no_main]

use libfuzzer_sys::fuzz_target;
use molcreativity::generation::extract_smiles;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Some(s) = extract_smiles(&text).smiles {
        assert_eq!(extract_smiles(&s).smiles.as_deref(), Some(s.as_str()));
    }
});
