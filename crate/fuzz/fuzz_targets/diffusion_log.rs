#![no_main]

use libfuzzer_sys::fuzz_target;
use sharecast::events::{format_diffusions, parse_diffusions};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_diffusions(text, "fuzz") {
        let again = parse_diffusions(&format_diffusions(&records), "fuzz").expect("formatted records parse");
        assert_eq!(records, again);
    }
});
