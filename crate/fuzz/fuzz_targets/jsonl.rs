#![no_main]

use std::path::Path;

use headlab::corpus::{parse_jsonl, to_jsonl};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sentences) = parse_jsonl(text, Path::new("fuzz")) {
        // Anything accepted must survive a write/read round trip.
        let again = parse_jsonl(&to_jsonl(&sentences).unwrap(), Path::new("fuzz")).unwrap();
        assert_eq!(again, sentences);
    }
});
