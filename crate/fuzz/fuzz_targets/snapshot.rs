#![no_main]

use headlab::encoder::decode_snapshots;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = decode_snapshots(data);
});
