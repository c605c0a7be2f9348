#![no_main]

use libfuzzer_sys::fuzz_target;
use molcreativity::generation::TaskRegistry;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(registry) = TaskRegistry::from_json(text) {
        let json = serde_json::to_string(&registry).unwrap();
        assert_eq!(TaskRegistry::from_json(&json).unwrap(), registry);
    }
});
