#![no_main]

use libfuzzer_sys::fuzz_target;
use sharecast::events::{format_catalog, parse_catalog};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_catalog(text, "fuzz") {
        let again = parse_catalog(&format_catalog(&records), "fuzz").expect("formatted records parse");
        assert_eq!(records, again);
    }
});
