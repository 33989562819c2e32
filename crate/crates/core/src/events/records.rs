//! Raw event records, their line formats, and the interned [`EventLog`].

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{read_text, write_text, Error, Result};

/// One share: `sender` passed a code for `item` to `receiver` at `timestamp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffusionRecord {
    pub sender: String,
    pub receiver: String,
    pub item: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PurchaseRecord {
    pub user: String,
    pub item: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrowseRecord {
    pub user: String,
    pub item: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub item: String,
    pub price_index: u32,
    pub category: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Diffusion,
    Purchase,
    Browse,
    Catalog,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Records {
    Diffusion(Vec<DiffusionRecord>),
    Purchase(Vec<PurchaseRecord>),
    Browse(Vec<BrowseRecord>),
    Catalog(Vec<CatalogEntry>),
}

impl Records {
    pub fn len(&self) -> usize {
        match self {
            Records::Diffusion(r) => r.len(),
            Records::Purchase(r) => r.len(),
            Records::Browse(r) => r.len(),
            Records::Catalog(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Yields `(line_number, fields)` for every non-blank, non-comment line.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split_whitespace().collect()))
        }
    })
}

fn expect_fields(origin: &str, line: usize, fields: &[&str], names: &[&str]) -> Result<()> {
    if fields.len() != names.len() {
        return Err(Error::parse(
            origin,
            line,
            format!("expected {} fields ({}), found {}", names.len(), names.join(" "), fields.len()),
        ));
    }
    Ok(())
}

fn parse_timestamp(origin: &str, line: usize, s: &str) -> Result<i64> {
    let t: i64 = s.parse().map_err(|_| Error::parse(origin, line, format!("bad timestamp `{s}`")))?;
    if t < 0 {
        return Err(Error::parse(origin, line, format!("negative timestamp {t}")));
    }
    Ok(t)
}

pub fn parse_diffusions(text: &str, origin: &str) -> Result<Vec<DiffusionRecord>> {
    data_lines(text)
        .map(|(n, f)| {
            expect_fields(origin, n, &f, &["sender", "receiver", "item", "timestamp"])?;
            if f[0] == f[1] {
                return Err(Error::parse(origin, n, format!("self-share by `{}`", f[0])));
            }
            Ok(DiffusionRecord {
                sender: f[0].to_string(),
                receiver: f[1].to_string(),
                item: f[2].to_string(),
                timestamp: parse_timestamp(origin, n, f[3])?,
            })
        })
        .collect()
}

fn parse_user_item_time(text: &str, origin: &str) -> Result<Vec<(String, String, i64)>> {
    data_lines(text)
        .map(|(n, f)| {
            expect_fields(origin, n, &f, &["user", "item", "timestamp"])?;
            Ok((f[0].to_string(), f[1].to_string(), parse_timestamp(origin, n, f[2])?))
        })
        .collect()
}

pub fn parse_purchases(text: &str, origin: &str) -> Result<Vec<PurchaseRecord>> {
    Ok(parse_user_item_time(text, origin)?
        .into_iter()
        .map(|(user, item, timestamp)| PurchaseRecord { user, item, timestamp })
        .collect())
}

pub fn parse_browses(text: &str, origin: &str) -> Result<Vec<BrowseRecord>> {
    Ok(parse_user_item_time(text, origin)?
        .into_iter()
        .map(|(user, item, timestamp)| BrowseRecord { user, item, timestamp })
        .collect())
}

pub fn parse_catalog(text: &str, origin: &str) -> Result<Vec<CatalogEntry>> {
    data_lines(text)
        .map(|(n, f)| {
            expect_fields(origin, n, &f, &["item", "price_index", "category"])?;
            let price_index =
                f[1].parse().map_err(|_| Error::parse(origin, n, format!("bad price index `{}`", f[1])))?;
            Ok(CatalogEntry { item: f[0].to_string(), price_index, category: f[2].to_string() })
        })
        .collect()
}

pub fn parse_records(text: &str, origin: &str, kind: RecordKind) -> Result<Records> {
    Ok(match kind {
        RecordKind::Diffusion => Records::Diffusion(parse_diffusions(text, origin)?),
        RecordKind::Purchase => Records::Purchase(parse_purchases(text, origin)?),
        RecordKind::Browse => Records::Browse(parse_browses(text, origin)?),
        RecordKind::Catalog => Records::Catalog(parse_catalog(text, origin)?),
    })
}

/// Reads and validates one event file. Records come back in file order.
pub fn load_records(path: &Path, kind: RecordKind) -> Result<Records> {
    parse_records(&read_text(path)?, &path.display().to_string(), kind)
}

pub fn format_diffusions(records: &[DiffusionRecord]) -> String {
    let mut out = String::from("# sender receiver item timestamp\n");
    for r in records {
        let _ = writeln!(out, "{} {} {} {}", r.sender, r.receiver, r.item, r.timestamp);
    }
    out
}

pub fn format_purchases(records: &[PurchaseRecord]) -> String {
    let mut out = String::from("# user item timestamp\n");
    for r in records {
        let _ = writeln!(out, "{} {} {}", r.user, r.item, r.timestamp);
    }
    out
}

pub fn format_browses(records: &[BrowseRecord]) -> String {
    let mut out = String::from("# user item timestamp\n");
    for r in records {
        let _ = writeln!(out, "{} {} {}", r.user, r.item, r.timestamp);
    }
    out
}

pub fn format_catalog(entries: &[CatalogEntry]) -> String {
    let mut out = String::from("# item price_index category\n");
    for e in entries {
        let _ = writeln!(out, "{} {} {}", e.item, e.price_index, e.category);
    }
    out
}

/// Interned share with dense user and item indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Share {
    pub sender: u32,
    pub receiver: u32,
    pub item: u32,
    pub ts: i64,
}

/// Interned purchase or browse event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct UserEvent {
    pub user: u32,
    pub item: u32,
    pub ts: i64,
}

/// All four logs with string ids replaced by dense indices.
///
/// Users and items are numbered in ascending id order, so the numbering does
/// not depend on the order records appear in their files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    pub users: Vec<String>,
    pub items: Vec<String>,
    pub categories: Vec<String>,
    pub item_price: Vec<u32>,
    pub item_category: Vec<u32>,
    pub shares: Vec<Share>,
    pub purchases: Vec<UserEvent>,
    pub browses: Vec<UserEvent>,
}

impl EventLog {
    pub fn from_records(
        catalog: &[CatalogEntry],
        diffusions: &[DiffusionRecord],
        purchases: &[PurchaseRecord],
        browses: &[BrowseRecord],
    ) -> Result<Self> {
        let mut item_names = BTreeSet::new();
        for e in catalog {
            if !item_names.insert(e.item.as_str()) {
                return Err(Error::Invalid(format!("item `{}` listed twice in the catalog", e.item)));
            }
        }
        let items: Vec<String> = item_names.iter().map(|s| s.to_string()).collect();
        let item_index: HashMap<&str, u32> = items.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();
        let categories: Vec<String> = catalog
            .iter()
            .map(|e| e.category.as_str())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(str::to_string)
            .collect();
        let cat_index: HashMap<&str, u32> =
            categories.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();
        let mut item_price = vec![0; items.len()];
        let mut item_category = vec![0; items.len()];
        for e in catalog {
            let i = item_index[e.item.as_str()] as usize;
            item_price[i] = e.price_index;
            item_category[i] = cat_index[e.category.as_str()];
        }

        let mut user_names = BTreeSet::new();
        for r in diffusions {
            user_names.insert(r.sender.as_str());
            user_names.insert(r.receiver.as_str());
        }
        user_names.extend(purchases.iter().map(|r| r.user.as_str()));
        user_names.extend(browses.iter().map(|r| r.user.as_str()));
        let users: Vec<String> = user_names.iter().map(|s| s.to_string()).collect();
        let user_index: HashMap<&str, u32> = users.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();

        let item_of = |name: &str, what: &str| -> Result<u32> {
            item_index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Invalid(format!("{what} references item `{name}` missing from the catalog")))
        };
        let shares = diffusions
            .iter()
            .map(|r| {
                Ok(Share {
                    sender: user_index[r.sender.as_str()],
                    receiver: user_index[r.receiver.as_str()],
                    item: item_of(&r.item, "diffusion record")?,
                    ts: r.timestamp,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let purchases = purchases
            .iter()
            .map(|r| {
                Ok(UserEvent { user: user_index[r.user.as_str()], item: item_of(&r.item, "purchase")?, ts: r.timestamp })
            })
            .collect::<Result<Vec<_>>>()?;
        let browses = browses
            .iter()
            .map(|r| {
                Ok(UserEvent { user: user_index[r.user.as_str()], item: item_of(&r.item, "browse")?, ts: r.timestamp })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(EventLog { users, items, categories, item_price, item_category, shares, purchases, browses })
    }

    /// Loads `catalog.txt`, `diffusion.txt`, `purchase.txt` and `browse.txt` from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let catalog = parse_catalog(&read_text(&dir.join(CATALOG_FILE))?, CATALOG_FILE)?;
        let diffusions = parse_diffusions(&read_text(&dir.join(DIFFUSION_FILE))?, DIFFUSION_FILE)?;
        let purchases = parse_purchases(&read_text(&dir.join(PURCHASE_FILE))?, PURCHASE_FILE)?;
        let browses = parse_browses(&read_text(&dir.join(BROWSE_FILE))?, BROWSE_FILE)?;
        Self::from_records(&catalog, &diffusions, &purchases, &browses)
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn user_index(&self, name: &str) -> Option<u32> {
        self.users.binary_search_by(|u| u.as_str().cmp(name)).ok().map(|i| i as u32)
    }

    pub fn item_index(&self, name: &str) -> Option<u32> {
        self.items.binary_search_by(|u| u.as_str().cmp(name)).ok().map(|i| i as u32)
    }
}

pub const CATALOG_FILE: &str = "catalog.txt";
pub const DIFFUSION_FILE: &str = "diffusion.txt";
pub const PURCHASE_FILE: &str = "purchase.txt";
pub const BROWSE_FILE: &str = "browse.txt";

/// The four raw logs as produced by the generator or read from disk.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawLogs {
    pub catalog: Vec<CatalogEntry>,
    pub diffusions: Vec<DiffusionRecord>,
    pub purchases: Vec<PurchaseRecord>,
    pub browses: Vec<BrowseRecord>,
}

impl RawLogs {
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_text(&dir.join(CATALOG_FILE), &format_catalog(&self.catalog))?;
        write_text(&dir.join(DIFFUSION_FILE), &format_diffusions(&self.diffusions))?;
        write_text(&dir.join(PURCHASE_FILE), &format_purchases(&self.purchases))?;
        write_text(&dir.join(BROWSE_FILE), &format_browses(&self.browses))?;
        Ok(())
    }

    pub fn to_event_log(&self) -> Result<EventLog> {
        EventLog::from_records(&self.catalog, &self.diffusions, &self.purchases, &self.browses)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_empty() {
        assert!(parse_diffusions("", "x").unwrap().is_empty());
        assert!(parse_diffusions("# only a comment\n\n", "x").unwrap().is_empty());
    }

    #[test]
    fn single_line() {
        let r = parse_diffusions("a b p1 100", "x").unwrap();
        assert_eq!(
            r,
            vec![DiffusionRecord { sender: "a".into(), receiver: "b".into(), item: "p1".into(), timestamp: 100 }]
        );
    }

    #[test]
    fn self_loop_cites_line() {
        let err = parse_diffusions("a b p 1\nb c p 2\nc c p 3\n", "log").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(err.to_string().starts_with("log:3:"));
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(parse_purchases("u p\n", "x"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_purchases("u p 1\nu p -5\n", "x"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_catalog("p 1.5 c\n", "x"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn interning_is_order_independent() {
        let cat = vec![
            CatalogEntry { item: "q".into(), price_index: 3, category: "c2".into() },
            CatalogEntry { item: "p".into(), price_index: 1, category: "c1".into() },
        ];
        let d1 = parse_diffusions("z a p 1\na m q 2\n", "x").unwrap();
        let d2: Vec<_> = d1.iter().rev().cloned().collect();
        let a = EventLog::from_records(&cat, &d1, &[], &[]).unwrap();
        let b = EventLog::from_records(&cat, &d2, &[], &[]).unwrap();
        assert_eq!(a.users, vec!["a", "m", "z"]);
        assert_eq!(a.items, b.items);
        assert_eq!(a.item_price, vec![1, 3]);
        assert_eq!(a.shares[0], Share { sender: 2, receiver: 0, item: 0, ts: 1 });
        assert_eq!(b.shares[1], a.shares[0]);
    }

    #[test]
    fn unknown_item_is_rejected() {
        let d = parse_diffusions("a b nope 1\n", "x").unwrap();
        assert!(EventLog::from_records(&[], &d, &[], &[]).is_err());
    }
}
