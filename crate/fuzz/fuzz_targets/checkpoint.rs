#![no_main]

use headlab_tensor::decode_checkpoint;
use libfuzzer_sys::fuzz_target;

// Input layout: u32 LE manifest length, manifest JSON, weight blob.
fuzz_target!(|data: &[u8]| {
    let Some((len, rest)) = data.split_first_chunk::<4>() else {
        return;
    };
    let len = u32::from_le_bytes(*len) as usize;
    if len > rest.len() {
        return;
    }
    let (manifest, blob) = rest.split_at(len);
    let _ = decode_checkpoint(manifest, blob);
});
