#![no_main]

use libfuzzer_sys::fuzz_target;
use sharecast::events::DynamicNetwork;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(network) = DynamicNetwork::from_snapshot(text, "fuzz") {
        let again = DynamicNetwork::from_snapshot(&network.to_snapshot(), "fuzz").expect("written snapshot reads back");
        assert_eq!(network.to_snapshot(), again.to_snapshot());
    }
});
