//! Model variants trained on one shared split.

use std::fmt::Write as _;

use serde::Serialize;
use sharecast_autodiff::Scalar;

use super::metrics::MetricResult;
use super::split::Split;
use super::train::{train, TrainConfig};
use crate::error::{Error, Result};
use crate::events::Query;
use crate::model::{Encoder, InfNet, ModelConfig, ModelDims};
use crate::sampler::QuerySubgraph;

#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub name: String,
    pub config: ModelConfig,
}

/// Variant names: `encoder-<none|mean|gru|self-attn>`, `-user`, `-item`,
/// `-taocode`, `-attention`, `-structural`.
pub fn parse_variant(name: &str, base: &ModelConfig) -> Result<Variant> {
    let mut config = *base;
    match name {
        "-user" => config.mask.user = true,
        "-item" => config.mask.item = true,
        "-taocode" => config.mask.taocode = true,
        "-attention" => config.edge_attention = false,
        "-structural" => config.structural_block = false,
        other => match other.strip_prefix("encoder-") {
            Some(enc) => config.encoder = enc.parse::<Encoder>()?,
            None => return Err(Error::Config(format!("unknown ablation variant `{other}`"))),
        },
    }
    Ok(Variant { name: name.to_string(), config })
}

/// Every encoder, every feature mask, and both block switches.
pub fn standard_variants(base: &ModelConfig) -> Vec<Variant> {
    let mut names: Vec<String> = Encoder::ALL.iter().map(|e| format!("encoder-{e}")).collect();
    names.extend(["-user", "-item", "-taocode", "-attention", "-structural"].map(String::from));
    names.iter().map(|n| parse_variant(n, base).expect("standard names parse")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub name: String,
    pub best_epoch: usize,
    pub test: MetricResult,
}

/// Trains the base configuration and then each variant with the same seed
/// and split. The first row is the base.
#[allow(clippy::too_many_arguments)]
pub fn ablate<F: Scalar>(
    base: &ModelConfig,
    variants: &[Variant],
    dims: ModelDims,
    queries: &[Query],
    subgraphs: &[QuerySubgraph],
    split: &Split,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Vec<AblationRow>> {
    let labels: Vec<bool> = queries.iter().map(|q| q.label).collect();
    let base_variant = Variant { name: "base".into(), config: *base };
    std::iter::once(&base_variant)
        .chain(variants)
        .map(|v| {
            log::info!("training variant {}", v.name);
            let model = InfNet::new(v.config, dims)?;
            let out = train::<F>(&model, queries, subgraphs, &labels, split, cfg, seed)?;
            Ok(AblationRow { name: v.name.clone(), best_epoch: out.best_epoch, test: out.test })
        })
        .collect()
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut out = format!("{:<20} {:>8} {:>8} {:>6}\n", "variant", "auc_roc", "auc_pr", "epoch");
    for r in rows {
        let _ = writeln!(out, "{:<20} {:>8.4} {:>8.4} {:>6}", r.name, r.test.all.auc_roc, r.test.all.auc_pr, r.best_epoch);
    }
    out
}
