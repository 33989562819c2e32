#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sharecast::events::{
    build_dynamic_network, materialize_all_queries, CatalogEntry, DiffusionRecord, DynamicNetwork, EventLog,
    PurchaseIndex, PurchaseRecord, Query, RawLogs, TimeGrid,
};
use sharecast::sampler::{FeatureConfig, QuerySubgraph, Sampler};

pub const STEP: i64 = 100;

/// Random logs over `n_users` users and a `steps`-step grid starting at 1000.
pub fn random_logs(rng: &mut ChaCha8Rng, n_users: usize, n_items: usize, n_shares: usize, steps: usize) -> RawLogs {
    let user = |i: usize| format!("u{i:03}");
    let catalog = (0..n_items)
        .map(|i| CatalogEntry { item: format!("p{i:02}"), price_index: rng.random_range(0..20), category: format!("c{}", i % 3) })
        .collect();
    let end = 1000 + STEP * steps as i64;
    let mut diffusions = Vec::new();
    while diffusions.len() < n_shares {
        let s = rng.random_range(0..n_users);
        let r = rng.random_range(0..n_users);
        if s != r {
            diffusions.push(DiffusionRecord {
                sender: user(s),
                receiver: user(r),
                item: format!("p{:02}", rng.random_range(0..n_items)),
                timestamp: rng.random_range(1000..end),
            });
        }
    }
    let purchases = (0..n_shares)
        .map(|_| PurchaseRecord {
            user: user(rng.random_range(0..n_users)),
            item: format!("p{:02}", rng.random_range(0..n_items)),
            timestamp: rng.random_range(0..end),
        })
        .collect();
    RawLogs { catalog, diffusions, purchases, browses: Vec::new() }
}

pub struct Case {
    pub log: EventLog,
    pub network: DynamicNetwork,
    pub purchases: PurchaseIndex,
    pub queries: Vec<Query>,
}

impl Case {
    pub fn new(logs: &RawLogs, steps: usize) -> Self {
        let log = logs.to_event_log().unwrap();
        let network = build_dynamic_network(&log, TimeGrid::new(1000, STEP, steps).unwrap());
        let purchases = PurchaseIndex::new(log.n_users(), &log.purchases);
        let queries = materialize_all_queries(&network, &purchases).unwrap();
        Case { log, network, purchases, queries }
    }

    pub fn sampler(&self, bins: usize) -> Sampler<'_> {
        let cfg = FeatureConfig { bins, ..FeatureConfig::default() };
        Sampler::new(&self.network, &self.purchases, &self.log.item_price, &cfg).unwrap()
    }
}

/// A sampled subgraph with at most `max_nodes` nodes and exactly `steps`
/// history steps, drawn from a random network.
pub fn small_subgraph(seed: u64, max_nodes: usize, steps: usize, bins: usize) -> QuerySubgraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let logs = random_logs(&mut rng, max_nodes, 3, 4 * max_nodes, steps + 1);
        let case = Case::new(&logs, steps + 1);
        let sampler = case.sampler(bins);
        for q in case.queries.iter().filter(|q| q.step == steps) {
            let sg = sampler.sample(q).unwrap();
            if sg.n_nodes() <= max_nodes && sg.edges.iter().any(|e| e.step == 0) {
                return sg;
            }
        }
    }
}

/// Random subgraph with up to `max_users` users, for property tests.
pub fn random_subgraph(rng: &mut ChaCha8Rng, max_users: usize, bins: usize) -> QuerySubgraph {
    loop {
        let n_users = rng.random_range(3..=max_users);
        let steps = rng.random_range(2..=4);
        let n_shares = rng.random_range(n_users..4 * n_users);
        let logs = random_logs(rng, n_users, 4, n_shares, steps);
        let case = Case::new(&logs, steps);
        if case.queries.is_empty() {
            continue;
        }
        let q = case.queries[rng.random_range(0..case.queries.len())];
        return case.sampler(bins).sample(&q).unwrap();
    }
}
