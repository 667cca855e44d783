//! Phraselette service: sessions on disk, the HTTP API the UI consumes,
//! and the batch CLI.

pub mod api;
pub mod backend;
pub mod cli;
pub mod config;
pub mod session;
