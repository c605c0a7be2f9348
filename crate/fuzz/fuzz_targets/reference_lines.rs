#![no_main]

use libfuzzer_sys::fuzz_target;
use molcreativity::refset::{parse_activity_lines, Target};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let load = parse_activity_lines(text.lines(), Target::Drd2);
    assert!(load.records.iter().all(|r| r.activity.is_finite()));
});
