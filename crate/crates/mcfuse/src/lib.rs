//! Files, command line and local HTTP service around `mcfuse-core`.

pub mod cli;
pub mod error;
pub mod export;
pub mod ingest;
pub mod pipeline;
pub mod schema;
pub mod server;
pub mod synth;

pub use error::{AppError, Result};
pub use pipeline::Prepared;
pub use schema::Schema;
