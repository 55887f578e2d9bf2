#![no_main]

use libfuzzer_sys::fuzz_target;

use backoff_sim::tracefmt;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(record) = tracefmt::parse_line(text, 1) {
            assert!(record.is_consistent());
            let line = tracefmt::format_record(&record);
            let round = tracefmt::parse_line(&line, 1).expect("canonical form parses");
            assert_eq!(round, record);
        }
    }
});
