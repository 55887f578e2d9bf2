#![no_main]

use libfuzzer_sys::fuzz_target;

use backoff_sim::harness::SweepSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = serde_json::from_str::<SweepSpec>(text) {
            // validation must classify, never panic
            let _ = spec.validate();
        }
    }
});
