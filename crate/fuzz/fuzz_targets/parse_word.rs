#![no_main]

use freedyn::freegroup::{GroupContext, Word};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for basis in [vec!["a", "b"], vec!["x1", "x2", "x3"]] {
        let c = GroupContext::new(basis).unwrap();
        if let Ok(w) = c.parse_word(text) {
            // formatting then parsing is the identity on reduced words
            assert_eq!(c.parse_word(&c.format_word(&w)).unwrap(), w);
            let (core, conj) = w.cyclic_reduce();
            assert_eq!(conj.concat(&core.to_word()).concat(&conj.inverse()), w);
        }
        if let Ok(letters) = c.parse_letters(text) {
            let w = Word::reduce(letters);
            assert_eq!(Word::reduce(w.letters().to_vec()), w);
        }
    }
});
