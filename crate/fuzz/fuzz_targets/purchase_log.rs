#![no_main]

use libfuzzer_sys::fuzz_target;
use sharecast::events::{format_purchases, parse_purchases};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_purchases(text, "fuzz") {
        let again = parse_purchases(&format_purchases(&records), "fuzz").expect("formatted records parse");
        assert_eq!(records, again);
    }
});
