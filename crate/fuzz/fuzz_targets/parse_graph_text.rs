#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(g) = sfe_cli::graph_io::parse_graph_text(text) {
            // Parsed graphs must satisfy their structural invariants.
            assert!(g.n() >= 1 && g.n() <= 64);
            for (u, v) in g.edges() {
                assert!(u < g.n() && v < g.n() && u != v);
                assert!(g.has_edge(v, u));
            }
        }
    }
});
