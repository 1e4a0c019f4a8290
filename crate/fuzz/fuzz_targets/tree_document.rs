#![no_main]

use freedyn::document::{tree_from_json, tree_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = tree_from_json(text) {
        let again = tree_to_json(&t);
        assert_eq!(tree_from_json(&again).unwrap(), t);
    }
});
