#![no_main]

use libfuzzer_sys::fuzz_target;
use sharecast::events::{format_browses, parse_browses};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_browses(text, "fuzz") {
        let again = parse_browses(&format_browses(&records), "fuzz").expect("formatted records parse");
        assert_eq!(records, again);
    }
});
