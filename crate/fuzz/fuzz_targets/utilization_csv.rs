#![no_main]

use headlab::trainer::UtilizationGrid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grids) = UtilizationGrid::read_csv(text) {
        for g in &grids {
            let _ = g.get(0, 0);
            let _ = g.to_csv();
        }
    }
});
