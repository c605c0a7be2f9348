#![no_main]

use libfuzzer_sys::fuzz_target;
use molcreativity::oracle::{parse_hello, parse_response};

fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else {
        return;
    };
    let text = String::from_utf8_lossy(rest);
    let _ = parse_hello(&text);
    if let Ok(scores) = parse_response(&text, 1, usize::from(n % 8)) {
        assert_eq!(scores.len(), usize::from(n % 8));
    }
});
