#![no_main]

use libfuzzer_sys::fuzz_target;

use backoff_sim::domain::TimingParams;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(params) = serde_json::from_str::<TimingParams>(text) {
            if params.validate().is_ok() {
                // validated params have a canonical JSON form that round-trips
                let json = serde_json::to_string(&params).expect("serializes");
                let round: TimingParams =
                    serde_json::from_str(&json).expect("canonical form parses");
                assert_eq!(round, params);
            }
        }
    }
});
