#![no_main]

use freedyn::config::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

// First byte picks the encoding, the rest is the document.
fuzz_target!(|data: &[u8]| {
    let Some((&flag, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let _ = ExperimentConfig::parse(text, flag & 1 == 1);
});
