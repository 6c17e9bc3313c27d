pub mod analytics;
pub mod commands;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod lasso;
pub mod manifest;
pub mod mlp;
pub mod models;
pub mod panel;
pub mod seed;
pub mod spatial;
pub mod synth;

pub use error::{Error, Result};
