//! Event logs, the time grid, the dynamic share network, and prediction queries.

mod grid;
mod network;
mod queries;
mod records;

pub use grid::{build_time_grid, TimeGrid, WEEK};
pub use network::{build_dynamic_network, DynamicNetwork, StepEdge, StepGraph, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use queries::{
    format_queries, materialize_all_queries, materialize_queries, parse_queries, read_queries, write_queries,
    PurchaseIndex, Query,
};
pub use records::{
    format_browses, format_catalog, format_diffusions, format_purchases, load_records, parse_browses, parse_catalog,
    parse_diffusions, parse_purchases, parse_records, BrowseRecord, CatalogEntry, DiffusionRecord, EventLog,
    PurchaseRecord, RawLogs, RecordKind, Records, Share, UserEvent, BROWSE_FILE, CATALOG_FILE, DIFFUSION_FILE,
    PURCHASE_FILE,
};
