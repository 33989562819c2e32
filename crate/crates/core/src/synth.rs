//! Seeded generator of sharing, browsing and purchase logs with planted
//! diffusion effects.
//!
//! Users sit on a contact graph with truncated power-law degrees. Before the
//! grid opens there is a browse-only history period, which is what separates
//! warm users from cold ones. Inside the grid, users start shares to a few
//! contacts and receivers forward them on, so shares form cascades. Each
//! receipt triggers a purchase with probability
//!
//! ```text
//! logistic(b0 + b_taocode + b_neighbors * close + b_sender_bought * [sender bought]
//!          + b_price * PI + b_gap * min(|deg_s - deg_r|, gap_cap) + affinity_r)
//! ```
//!
//! and each browse with `logistic(b0 + b_price * PI + affinity_u)`.
//! `close` counts the receiver's earlier share partners who had already
//! received and bought the item, the same quantity the analytics measure.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{BrowseRecord, CatalogEntry, DiffusionRecord, PurchaseRecord, RawLogs, TimeGrid, WEEK};
use crate::seeds;

/// Logistic-link coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Effects {
    pub intercept: f64,
    pub taocode: f64,
    pub neighbors: f64,
    pub sender_bought: f64,
    pub price: f64,
    pub gap: f64,
    /// Degree gaps above this count as this.
    pub gap_cap: u32,
}

impl Default for Effects {
    fn default() -> Self {
        Effects {
            intercept: -0.5,
            taocode: 1.0,
            neighbors: 1.0,
            sender_bought: 1.8,
            price: -0.12,
            gap: 0.05,
            gap_cap: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub users: usize,
    pub items: usize,
    pub categories: usize,
    pub price_min: u32,
    pub price_max: u32,
    pub steps: usize,
    pub step_length: i64,
    /// Length of the browse-only period before the grid, in steps.
    pub history_steps: usize,
    /// Shares started per user per step.
    pub share_rate: f64,
    /// Chance that a receiver passes the share on.
    pub forward_prob: f64,
    /// Same, for receivers who went on to buy; they pass it on after buying.
    pub forward_bought: f64,
    /// Log-normal spread of per-user sharing activity (mean 1).
    pub activity_spread: f64,
    /// Each share goes to between 1 and this many contacts.
    pub max_fanout: usize,
    /// Mean wait before forwarding, in steps.
    pub forward_delay: f64,
    /// Chance that a started share is of an item the user already bought.
    pub share_bought: f64,
    /// Browses per user per step.
    pub browse_rate: f64,
    pub degree_exponent: f64,
    pub max_degree: usize,
    /// Per user, chance of linking two of its contacts to each other.
    pub closure: f64,
    pub popularity_exponent: f64,
    /// Spread of the per-user purchase propensity.
    pub affinity_scale: f64,
    /// Weight of the contacts' mean in a user's propensity.
    pub homophily: f64,
    /// Purchases follow their trigger after a uniform delay in this range, in steps.
    pub purchase_delay: [f64; 2],
    pub effects: Effects,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            users: 50_000,
            items: 2_000,
            categories: 40,
            price_min: 1,
            price_max: 20,
            steps: 4,
            step_length: WEEK,
            history_steps: 8,
            share_rate: 0.045,
            forward_prob: 0.3,
            forward_bought: 0.6,
            activity_spread: 1.0,
            max_fanout: 2,
            forward_delay: 1.0,
            share_bought: 0.3,
            browse_rate: 1.0,
            degree_exponent: 2.0,
            max_degree: 200,
            closure: 0.5,
            popularity_exponent: 1.0,
            affinity_scale: 1.5,
            homophily: 0.85,
            purchase_delay: [0.5, 1.0],
            effects: Effects::default(),
        }
    }
}

fn check(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("synth: {msg}")))
    }
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.users >= 2, "users must be at least 2")?;
        check(self.items >= 1 && self.categories >= 1, "need at least one item and one category")?;
        check(self.price_min <= self.price_max, "price_min exceeds price_max")?;
        check(self.steps >= 2 && self.step_length > 0, "need at least 2 steps of positive length")?;
        check(unit(self.forward_prob) && unit(self.forward_bought) && unit(self.share_bought) && unit(self.closure) && unit(self.homophily), "probabilities must lie in [0, 1]")?;
        check(self.max_fanout >= 1 && self.max_degree >= 1, "max_fanout and max_degree must be positive")?;
        check(self.share_rate >= 0.0 && self.browse_rate >= 0.0, "rates must be non-negative")?;
        check(self.forward_delay > 0.0, "forward_delay must be positive")?;
        check(self.degree_exponent.is_finite() && self.popularity_exponent.is_finite(), "exponents must be finite")?;
        check(self.affinity_scale >= 0.0 && self.activity_spread >= 0.0, "spreads must be non-negative")?;
        let [lo, hi] = self.purchase_delay;
        check(lo > 0.0 && lo <= hi, "purchase_delay must be 0 < lo <= hi")?;
        let e = &self.effects;
        let all = [e.intercept, e.taocode, e.neighbors, e.sender_bought, e.price, e.gap];
        check(all.iter().all(|x| x.is_finite()), "effects must be finite")?;
        self.grid().map(|_| ())
    }

    /// The study window: it opens after the history period.
    pub fn grid(&self) -> Result<TimeGrid> {
        let start = (self.history_steps as i64)
            .checked_mul(self.step_length)
            .ok_or_else(|| Error::Config("synth: history period overflows".into()))?;
        TimeGrid::new(start, self.step_length, self.steps)
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn id(prefix: char, i: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len();
    format!("{prefix}{i:0width$}")
}

fn key(u: u32, p: u32) -> u64 {
    (u as u64) << 32 | p as u64
}

struct Catalog {
    price: Vec<u32>,
    category: Vec<usize>,
    popularity: WeightedIndex<f64>,
}

fn catalog(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Catalog> {
    let (lo, hi) = (cfg.price_min as f64, cfg.price_max as f64);
    let base: Vec<f64> = (0..cfg.categories).map(|_| rng.random_range(lo..=hi)).collect();
    let spread = Normal::new(0.0, 1.5).expect("valid normal");
    let mut price = Vec::with_capacity(cfg.items);
    let mut category = Vec::with_capacity(cfg.items);
    for _ in 0..cfg.items {
        let c = rng.random_range(0..cfg.categories);
        let pi = (base[c] + spread.sample(rng)).round().clamp(lo, hi);
        category.push(c);
        price.push(pi as u32);
    }
    let mut rank: Vec<usize> = (1..=cfg.items).collect();
    rank.shuffle(rng);
    let weights = rank.iter().map(|&r| (r as f64).powf(-cfg.popularity_exponent));
    let popularity = WeightedIndex::new(weights).map_err(|e| Error::Config(format!("synth: item popularity: {e}")))?;
    Ok(Catalog { price, category, popularity })
}

/// Configuration-model graph: self-loops and repeated pairs are dropped.
fn contact_graph(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<u32>>> {
    let weights = (1..=cfg.max_degree).map(|d| (d as f64).powf(-cfg.degree_exponent));
    let degree = WeightedIndex::new(weights).map_err(|e| Error::Config(format!("synth: degree law: {e}")))?;
    let mut stubs = Vec::new();
    for u in 0..cfg.users as u32 {
        let d = degree.sample(rng) + 1;
        stubs.extend(std::iter::repeat_n(u, d));
    }
    stubs.shuffle(rng);
    let mut adj = vec![Vec::new(); cfg.users];
    for pair in stubs.chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        if a != b {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let mut extra = Vec::new();
    for list in &adj {
        if list.len() >= 2 && rng.random_bool(cfg.closure) {
            let pair: Vec<u32> = list.choose_multiple(rng, 2).copied().collect();
            extra.push((pair[0], pair[1]));
        }
    }
    for (a, b) in extra {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    Ok(adj)
}

fn affinities(cfg: &SynthConfig, adj: &[Vec<u32>], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let z: Vec<f64> = (0..cfg.users).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
    let h = cfg.homophily;
    adj.iter()
        .enumerate()
        .map(|(u, nbrs)| {
            if nbrs.is_empty() {
                return cfg.affinity_scale * z[u];
            }
            let mean = nbrs.iter().map(|&v| z[v as usize]).sum::<f64>() / nbrs.len() as f64;
            let sd = ((1.0 - h).powi(2) + h * h / nbrs.len() as f64).sqrt();
            if sd == 0.0 {
                return 0.0;
            }
            cfg.affinity_scale * ((1.0 - h) * z[u] + h * mean) / sd
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Start { user: u32 },
    Receipt { sender: u32, receiver: u32, item: u32 },
}

struct World<'a> {
    cfg: &'a SynthConfig,
    cat: &'a Catalog,
    adj: &'a [Vec<u32>],
    affinity: &'a [f64],
    grid_end: i64,
    queue: BinaryHeap<Reverse<(i64, u64, Event)>>,
    seq: u64,
    /// Earliest purchase per (user, item).
    bought: HashMap<u64, i64>,
    /// Earliest receipt per (user, item).
    received: HashMap<u64, i64>,
    /// Share partners with the time the partnership began.
    partners: Vec<Vec<(i64, u32)>>,
    purchases_of: Vec<Vec<(i64, u32)>>,
    shares: Vec<(i64, u32, u32, u32)>,
    purchases: Vec<(i64, u32, u32)>,
}

impl World<'_> {
    fn push(&mut self, ts: i64, event: Event) {
        if ts < self.grid_end {
            self.seq += 1;
            self.queue.push(Reverse((ts, self.seq, event)));
        }
    }

    fn bought_before(&self, user: u32, item: u32, ts: i64) -> bool {
        self.bought.get(&key(user, item)).is_some_and(|&b| b < ts)
    }

    fn buy(&mut self, user: u32, item: u32, ts: i64) {
        let e = self.bought.entry(key(user, item)).or_insert(ts);
        *e = (*e).min(ts);
        self.purchases_of[user as usize].push((ts, item));
        self.purchases.push((ts, user, item));
    }

    fn delay(&self, rng: &mut ChaCha8Rng) -> i64 {
        let [lo, hi] = self.cfg.purchase_delay;
        (rng.random_range(lo..=hi) * self.cfg.step_length as f64).round().max(1.0) as i64
    }

    fn send(&mut self, rng: &mut ChaCha8Rng, from: u32, exclude: Option<u32>, item: u32, ts: i64) {
        let pool: Vec<u32> = self.adj[from as usize].iter().copied().filter(|&v| Some(v) != exclude).collect();
        let k = rng.random_range(1..=self.cfg.max_fanout).min(pool.len());
        for &to in pool.choose_multiple(rng, k) {
            self.push(ts, Event::Receipt { sender: from, receiver: to, item });
        }
    }

    fn close_neighbors(&self, user: u32, item: u32, ts: i64) -> usize {
        let mut seen: Vec<u32> = self.partners[user as usize].iter().filter(|&&(t, _)| t < ts).map(|&(_, w)| w).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.into_iter()
            .filter(|&w| self.received.get(&key(w, item)).is_some_and(|&r| r < ts) && self.bought_before(w, item, ts))
            .count()
    }

    fn start(&mut self, rng: &mut ChaCha8Rng, user: u32, ts: i64) {
        let owned: Vec<u32> = self.purchases_of[user as usize].iter().filter(|&&(t, _)| t < ts).map(|&(_, p)| p).collect();
        let item = if !owned.is_empty() && rng.random_bool(self.cfg.share_bought) {
            *owned.choose(rng).expect("non-empty")
        } else {
            self.cat.popularity.sample(rng) as u32
        };
        self.send(rng, user, None, item, ts);
    }

    fn receive(&mut self, rng: &mut ChaCha8Rng, sender: u32, receiver: u32, item: u32, ts: i64) {
        self.shares.push((ts, sender, receiver, item));
        let e = &self.cfg.effects;
        let close = self.close_neighbors(receiver, item, ts) as f64;
        let sender_bought = if self.bought_before(sender, item, ts) { 1.0 } else { 0.0 };
        let gap = (self.adj[sender as usize].len() as i64 - self.adj[receiver as usize].len() as i64).unsigned_abs();
        let logit = e.intercept
            + e.taocode
            + e.neighbors * close
            + e.sender_bought * sender_bought
            + e.price * self.cat.price[item as usize] as f64
            + e.gap * gap.min(e.gap_cap as u64) as f64
            + self.affinity[receiver as usize];
        self.partners[receiver as usize].push((ts, sender));
        self.partners[sender as usize].push((ts, receiver));
        let r = self.received.entry(key(receiver, item)).or_insert(ts);
        *r = (*r).min(ts);

        let mut bought_at = None;
        if rng.random_bool(logistic(logit)) {
            let at = ts + self.delay(rng);
            self.buy(receiver, item, at);
            bought_at = Some(at);
        }
        let p = if bought_at.is_some() { self.cfg.forward_bought } else { self.cfg.forward_prob };
        if rng.random_bool(p) {
            let wait = Exp::new(1.0 / self.cfg.forward_delay).expect("positive rate").sample(rng);
            let mut at = ts + (wait * self.cfg.step_length as f64).ceil() as i64;
            if let Some(b) = bought_at {
                at = at.max(b + 1);
            }
            if at < self.grid_end {
                self.send(rng, receiver, Some(sender), item, at);
            }
        }
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

/// Generates a catalog and the three event logs. Identical `cfg` and
/// `seed` give identical logs.
pub fn generate(cfg: &SynthConfig, seed: u64) -> Result<RawLogs> {
    cfg.validate()?;
    let mut rng = seeds::rng_for(seed, seeds::SYNTH);
    let grid = cfg.grid()?;
    let cat = catalog(cfg, &mut rng)?;
    let adj = contact_graph(cfg, &mut rng)?;
    let affinity = affinities(cfg, &adj, &mut rng);
    let e = &cfg.effects;

    let mut world = World {
        cfg,
        cat: &cat,
        adj: &adj,
        affinity: &affinity,
        grid_end: grid.end(),
        queue: BinaryHeap::new(),
        seq: 0,
        bought: HashMap::new(),
        received: HashMap::new(),
        partners: vec![Vec::new(); cfg.users],
        purchases_of: vec![Vec::new(); cfg.users],
        shares: Vec::new(),
        purchases: Vec::new(),
    };

    let mut browses = Vec::new();
    let span_steps = (cfg.history_steps + cfg.steps) as f64;
    for u in 0..cfg.users as u32 {
        for _ in 0..poisson(&mut rng, cfg.browse_rate * span_steps) {
            let item = cat.popularity.sample(&mut rng) as u32;
            let ts = rng.random_range(0..grid.end());
            browses.push((ts, u, item));
            let logit = e.intercept + e.price * cat.price[item as usize] as f64 + affinity[u as usize];
            if rng.random_bool(logistic(logit)) {
                let at = ts + world.delay(&mut rng);
                world.buy(u, item, at);
            }
        }
    }
    for list in &mut world.purchases_of {
        list.sort_unstable();
    }

    for u in 0..cfg.users as u32 {
        if adj[u as usize].is_empty() {
            continue;
        }
        let activity = (cfg.activity_spread * rng.sample::<f64, _>(rand_distr::StandardNormal)
            - cfg.activity_spread * cfg.activity_spread / 2.0)
            .exp();
        for _ in 0..poisson(&mut rng, cfg.share_rate * cfg.steps as f64 * activity) {
            let ts = rng.random_range(grid.start()..grid.end());
            world.push(ts, Event::Start { user: u });
        }
    }
    while let Some(Reverse((ts, _, event))) = world.queue.pop() {
        match event {
            Event::Start { user } => world.start(&mut rng, user, ts),
            Event::Receipt { sender, receiver, item } => world.receive(&mut rng, sender, receiver, item, ts),
        }
    }

    let (nu, ni) = (cfg.users, cfg.items);
    let item_id = |p: u32| id('p', p as usize, ni);
    let user_id = |u: u32| id('u', u as usize, nu);
    let catalog = (0..ni)
        .map(|p| CatalogEntry {
            item: item_id(p as u32),
            price_index: cat.price[p],
            category: id('c', cat.category[p], cfg.categories),
        })
        .collect();
    let mut shares = std::mem::take(&mut world.shares);
    shares.sort_unstable();
    let mut purchases = std::mem::take(&mut world.purchases);
    purchases.sort_unstable();
    browses.sort_unstable();
    Ok(RawLogs {
        catalog,
        diffusions: shares
            .into_iter()
            .map(|(ts, s, r, p)| DiffusionRecord { sender: user_id(s), receiver: user_id(r), item: item_id(p), timestamp: ts })
            .collect(),
        purchases: purchases
            .into_iter()
            .map(|(ts, u, p)| PurchaseRecord { user: user_id(u), item: item_id(p), timestamp: ts })
            .collect(),
        browses: browses
            .into_iter()
            .map(|(ts, u, p)| BrowseRecord { user: user_id(u), item: item_id(p), timestamp: ts })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig { users: 300, items: 40, categories: 5, ..SynthConfig::default() }
    }

    #[test]
    fn ids_are_zero_padded() {
        assert_eq!(id('u', 7, 1000), "u007");
        assert_eq!(id('p', 0, 1), "p0");
    }

    #[test]
    fn contact_degrees_are_mostly_small() {
        let cfg = SynthConfig { users: 20_000, ..SynthConfig::default() };
        let mut rng = seeds::rng_for(1, "t");
        let adj = contact_graph(&cfg, &mut rng).unwrap();
        let small = adj.iter().filter(|a| (1..=9).contains(&a.len())).count();
        assert!(small as f64 > 0.8 * cfg.users as f64, "{small}");
        assert!(adj.iter().enumerate().all(|(u, a)| !a.contains(&(u as u32))));
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(SynthConfig { steps: 1, ..small() }.validate().is_err());
        assert!(SynthConfig { forward_prob: 1.5, ..small() }.validate().is_err());
        assert!(SynthConfig { purchase_delay: [0.0, 1.0], ..small() }.validate().is_err());
        assert!(small().validate().is_ok());
    }

    #[test]
    fn logs_satisfy_event_invariants() {
        let logs = generate(&small(), 3).unwrap();
        assert!(logs.diffusions.iter().all(|d| d.sender != d.receiver));
        let log = logs.to_event_log().unwrap();
        assert!(log.shares.len() > 10);
        let grid = small().grid().unwrap();
        assert!(logs.diffusions.iter().all(|d| d.timestamp >= grid.start() && d.timestamp < grid.end()));
    }
}
