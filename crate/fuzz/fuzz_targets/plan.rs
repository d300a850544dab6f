#![no_main]

use headlab::trainer::TrainPlan;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(plan) = serde_json::from_slice::<TrainPlan>(data) {
        let _ = plan.validate();
        let _ = plan.label();
        let _ = plan.config_hash();
    }
});
