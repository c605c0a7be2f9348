#![no_main]

use libfuzzer_sys::fuzz_target;
use molcreativity::fingerprint::Fingerprint;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(fp) = Fingerprint::from_hex(&text, 2048) {
        assert_eq!(Fingerprint::from_hex(&fp.to_hex(), 2048).unwrap(), fp);
    }
});
