//! News retrieval learning-to-rank toolkit: preprocessing, twelve
//! query-document features, LETOR datasets, five rankers and rank metrics.

// validation rejects NaN through negated comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod corpus;
pub mod error;
pub mod features;
pub mod letor_io;
pub mod metrics;
pub mod rankers;
pub mod reproduce;
pub mod synth;
pub mod text_pipeline;

pub use error::{Error, Result};
