#![no_main]

use freedyn::document::{current_from_json, current_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mu) = current_from_json(text) {
        let again = current_to_json(&mu);
        assert_eq!(current_from_json(&again).unwrap(), mu);
    }
});
