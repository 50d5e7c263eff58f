#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = sfe_cli::graph_io::parse_graph_json(text);
        // The format auto-detector must be equally panic-free.
        let _ = sfe_cli::graph_io::parse_graph(text);
    }
});
