#![no_main]

use libfuzzer_sys::fuzz_target;

use harmonic_sections::geomfile::{load_geometry, parse_geometry};

// Document handling must never panic: rejection is always a typed error,
// and any accepted document serializes to a byte-stable form that is
// accepted again.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(doc) = parse_geometry(text) {
        let canonical = doc.to_toml();
        let again = parse_geometry(&canonical)
            .unwrap_or_else(|e| panic!("canonical form rejected: {e}"));
        assert_eq!(again.to_toml(), canonical, "canonical form is unstable");
        let _ = load_geometry(text);
    }
});
