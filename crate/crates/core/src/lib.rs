//! Build interest-diffusion networks from product-sharing logs, predict
//! item-level purchases with an edge-attention graph network, and measure
//! how sharing relates to conversion.

pub mod analytics;
pub mod config;
pub mod error;
pub mod eval;
pub mod events;
pub mod model;
pub mod sampler;
pub mod seeds;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
