//! Labeled prediction queries and the purchase index they are labeled from.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use super::network::DynamicNetwork;
use super::records::UserEvent;
use crate::error::{read_text, write_text, Error, Result};

/// Will `user` buy `item` during `step`, having received it in `step - 1`?
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Query {
    pub user: u32,
    pub item: u32,
    pub step: usize,
    pub label: bool,
    pub cold: bool,
}

/// Purchases grouped per user and sorted by `(timestamp, item)`.
#[derive(Debug, Clone)]
pub struct PurchaseIndex {
    by_user: Vec<Vec<(i64, u32)>>,
}

impl PurchaseIndex {
    pub fn new(n_users: usize, purchases: &[UserEvent]) -> Self {
        let mut by_user = vec![Vec::new(); n_users];
        for p in purchases {
            by_user[p.user as usize].push((p.ts, p.item));
        }
        for v in &mut by_user {
            v.sort_unstable();
        }
        PurchaseIndex { by_user }
    }

    pub fn of_user(&self, user: u32) -> &[(i64, u32)] {
        self.by_user.get(user as usize).map_or(&[], Vec::as_slice)
    }

    /// Purchases of `user` with timestamp in `[from, to)`.
    pub fn in_window(&self, user: u32, from: i64, to: i64) -> &[(i64, u32)] {
        let all = self.of_user(user);
        let lo = all.partition_point(|&(t, _)| t < from);
        let hi = all.partition_point(|&(t, _)| t < to);
        &all[lo..hi.max(lo)]
    }

    pub fn bought_in(&self, user: u32, item: u32, from: i64, to: i64) -> bool {
        self.in_window(user, from, to).iter().any(|&(_, i)| i == item)
    }

    pub fn any_before(&self, user: u32, ts: i64) -> bool {
        self.of_user(user).first().is_some_and(|&(t, _)| t < ts)
    }
}

/// One query per distinct `(receiver, item)` shared during `step - 1`.
pub fn materialize_queries(network: &DynamicNetwork, purchases: &PurchaseIndex, step: usize) -> Result<Vec<Query>> {
    if step == 0 || step >= network.n_steps() {
        return Err(Error::Invalid(format!(
            "query step {step} out of range 1..={}",
            network.n_steps().saturating_sub(1)
        )));
    }
    let pairs: BTreeSet<(u32, u32)> = network
        .step(step - 1)
        .edges()
        .iter()
        .flat_map(|e| e.events.iter().map(move |&(item, _)| (e.dst, item)))
        .collect();
    let (from, to) = network.grid().interval(step);
    let grid_start = network.grid().start();
    Ok(pairs
        .into_iter()
        .map(|(user, item)| Query {
            user,
            item,
            step,
            label: purchases.bought_in(user, item, from, to),
            cold: !purchases.any_before(user, grid_start),
        })
        .collect())
}

/// Queries for every step `1..n`, in step order.
pub fn materialize_all_queries(network: &DynamicNetwork, purchases: &PurchaseIndex) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    for step in 1..network.n_steps() {
        out.extend(materialize_queries(network, purchases, step)?);
    }
    Ok(out)
}

pub fn format_queries(queries: &[Query], network: &DynamicNetwork) -> String {
    let mut out = String::from("# user item step label cold\n");
    for q in queries {
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            network.users()[q.user as usize],
            network.items()[q.item as usize],
            q.step,
            u8::from(q.label),
            u8::from(q.cold)
        );
    }
    out
}

/// Parses a query list, resolving ids against `network` and checking that
/// every query is backed by a share in the previous step.
pub fn parse_queries(text: &str, origin: &str, network: &DynamicNetwork) -> Result<Vec<Query>> {
    let flag = |n: usize, s: &str| match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::parse(origin, n, format!("expected 0 or 1, found `{s}`"))),
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(Error::parse(origin, n, "expected `user item step label cold`"));
        }
        let user = network.user_index(f[0]).ok_or_else(|| Error::parse(origin, n, format!("unknown user `{}`", f[0])))?;
        let item = network.item_index(f[1]).ok_or_else(|| Error::parse(origin, n, format!("unknown item `{}`", f[1])))?;
        let step: usize = f[2].parse().map_err(|_| Error::parse(origin, n, format!("bad step `{}`", f[2])))?;
        if step == 0 || step >= network.n_steps() {
            return Err(Error::parse(origin, n, format!("step {step} out of range")));
        }
        let received = network.step(step - 1).in_edges(user).any(|e| e.events.iter().any(|&(p, _)| p == item));
        if !received {
            return Err(Error::parse(origin, n, "user did not receive the item in the previous step"));
        }
        out.push(Query { user, item, step, label: flag(n, f[3])?, cold: flag(n, f[4])? });
    }
    Ok(out)
}

pub fn write_queries(path: &Path, queries: &[Query], network: &DynamicNetwork) -> Result<()> {
    write_text(path, &format_queries(queries, network))
}

pub fn read_queries(path: &Path, network: &DynamicNetwork) -> Result<Vec<Query>> {
    parse_queries(&read_text(path)?, &path.display().to_string(), network)
}
