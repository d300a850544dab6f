#![no_main]

use headlab::corpus::{synth_generate, GrammarConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = GrammarConfig::from_json(text) {
        // A grammar that validates must generate well-formed sentences.
        if let Ok(c) = synth_generate(&g, 2, 0) {
            for s in &c {
                s.validate().unwrap();
            }
        }
    }
});
