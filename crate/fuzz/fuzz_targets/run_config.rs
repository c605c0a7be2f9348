#![no_main]

use libfuzzer_sys::fuzz_target;
use molcreativity_cli::Config;

fuzz_target!(|data: &[u8]| {
    let _ = serde_json::from_slice::<Config>(data);
});
