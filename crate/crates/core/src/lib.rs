//! Correlated-error analysis for sets of predictive models, and Monte-Carlo
//! simulation of hiring markets whose firms rank applicants with those models.
//!
//! The crate is organised around the data it consumes:
//!
//! * [`ingest`] loads multiple-choice responses, numeric ratings and model
//!   metadata from CSV/JSONL.
//! * [`correlation`] computes pairwise agreement and residual-correlation
//!   metrics, random baselines and accuracy-sorted matrices.
//! * [`regression`] builds pair-level feature tables and fits OLS models.
//! * [`judge`] measures accuracy inflation when one model grades the others.
//! * [`market`] simulates interview screening and stable matching markets.
//! * [`synthetic`] generates ensembles with a known correlation structure.
//!
//! Heavy loops (all-pairs matrices, market replicates) run on rayon when the
//! `parallel` feature is enabled and fall back to plain iterators otherwise.
//! Results never depend on the execution mode or the thread count.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlation;
pub mod error;
pub mod exec;
pub mod ingest;
pub mod judge;
pub mod market;
pub mod regression;
pub mod seed;
pub mod stats;
pub mod svg;
pub mod synthetic;

pub use error::{Error, Result};
pub use exec::Execution;
pub use ingest::{ModelMeta, MetadataTable, RatingDataset, ResponseDataset};
