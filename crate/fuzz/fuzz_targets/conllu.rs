#![no_main]

use std::path::Path;

use headlab::corpus::{parse_conllu, TagColumn};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for tags in [TagColumn::Upos, TagColumn::Xpos] {
        if let Ok(sentences) = parse_conllu(text, Path::new("fuzz"), tags) {
            for s in &sentences {
                s.validate().unwrap();
            }
        }
    }
});
