//! Ingestion, persistence, orchestration and the JSON read API.
//!
//! One writer (ingest then orchestrate) owns the [`store::TweetStore`];
//! API handlers read immutable snapshots published after each cycle.

pub mod api;
pub mod config;
pub mod error;
pub mod orchestrate;
pub mod query;
pub mod registry;
pub mod server;
pub mod source;
pub mod store;

pub use error::{Result, ServiceError};
