#![no_main]
use libfuzzer_sys::fuzz_target;

use sfe_cli::report::Report;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(report) = serde_json::from_str::<Report>(text) {
            // Emit/parse must be a fixed point once a report is accepted.
            let emitted = report.to_json_pretty();
            let reparsed: Report = serde_json::from_str(&emitted).expect("emitted report parses");
            assert_eq!(reparsed, report);
            assert_eq!(reparsed.stable_json(), report.stable_json());
        }
    }
});
