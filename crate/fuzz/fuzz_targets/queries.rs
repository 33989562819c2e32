#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use sharecast::events::{
    build_dynamic_network, parse_catalog, parse_diffusions, parse_queries, DynamicNetwork, EventLog, TimeGrid,
};

const CATALOG: &str = "p1 3 c1\np2 7 c2\n";
const SHARES: &str = "a b p1 1000\nb c p1 1100\nc a p2 1150\na c p2 1250\n";

fn network() -> &'static DynamicNetwork {
    static NET: OnceLock<DynamicNetwork> = OnceLock::new();
    NET.get_or_init(|| {
        let shares = parse_diffusions(SHARES, "seed").unwrap();
        let catalog = parse_catalog(CATALOG, "seed").unwrap();
        let log = EventLog::from_records(&catalog, &shares, &[], &[]).unwrap();
        build_dynamic_network(&log, TimeGrid::new(1000, 100, 3).unwrap())
    })
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(queries) = parse_queries(text, "fuzz", network()) {
        assert!(queries.iter().all(|q| q.step < network().n_steps()));
    }
});
