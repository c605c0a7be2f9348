#![no_main]

use libfuzzer_sys::fuzz_target;
use molcreativity::generation::parse_completion;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let _ = parse_completion(&text);
});
