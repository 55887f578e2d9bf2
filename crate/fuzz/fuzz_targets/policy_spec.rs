#![no_main]

use libfuzzer_sys::fuzz_target;

use backoff_sim::domain::PolicySpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = text.parse::<PolicySpec>() {
            // the display form is canonical and must reparse to itself
            let round: PolicySpec = spec.to_string().parse().expect("canonical form parses");
            assert_eq!(round, spec);
        }
    }
});
