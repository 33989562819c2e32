//! Train/validation/test partition by query day.

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::events::Query;
use crate::seeds;

pub const TRAIN_FRACTION: f64 = 0.7;

/// Indices into the query list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub scheme: String,
}

/// Queries of the last step form the test set; earlier ones are shuffled
/// with the split stream of `seed` and cut 70/30 (rounded) into train and
/// validation.
pub fn split_queries(queries: &[Query], seed: u64) -> Result<Split> {
    let mut days: Vec<usize> = queries.iter().map(|q| q.step).collect();
    days.sort_unstable();
    days.dedup();
    if days.len() < 3 {
        return Err(Error::Invalid(format!("splitting needs queries on 3+ steps, found {}", days.len())));
    }
    let last = *days.last().expect("3+ days");
    let test: Vec<usize> = (0..queries.len()).filter(|&i| queries[i].step == last).collect();
    let mut rest: Vec<usize> = (0..queries.len()).filter(|&i| queries[i].step != last).collect();
    rest.shuffle(&mut seeds::rng_for(seed, seeds::SPLIT));
    let n_train = (TRAIN_FRACTION * rest.len() as f64).round() as usize;
    let validation = rest.split_off(n_train);
    let mut train = rest;
    train.sort_unstable();
    let mut validation = validation;
    validation.sort_unstable();
    if train.is_empty() || validation.is_empty() {
        return Err(Error::Invalid("split leaves the train or validation set empty".into()));
    }
    Ok(Split {
        train,
        validation,
        test,
        scheme: format!("steps {:?} shuffled 70/30 into train/validation, step {last} test", &days[..days.len() - 1]),
    })
}
