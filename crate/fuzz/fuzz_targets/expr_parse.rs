#![no_main]

use libfuzzer_sys::fuzz_target;

use harmonic_sections::expr::parse;

// Parsing must never panic, and anything it accepts must print back to a
// string that parses to the identical tree.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(expr) = parse(text) {
        let printed = expr.to_string();
        let reparsed = parse(&printed)
            .unwrap_or_else(|e| panic!("printer emitted unparseable `{printed}`: {e}"));
        assert_eq!(expr, reparsed, "round-trip changed `{printed}`");
    }
});
