//! Review service for annotation-correction flags.
//!
//! [`ReviewSession`] holds one corpus, its flags and the decisions taken so
//! far; every decision is appended to the decisions file before it is
//! acknowledged. [`router`] exposes the session over HTTP + JSON.

mod api;
mod session;

pub use api::{router, serve, ServeOptions};
pub use session::{
    ExportSummary, FlagContext, FlagFilter, Page, Progress, ReviewError, ReviewSession,
};
