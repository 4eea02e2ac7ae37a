//! HTTP server and administration CLI for the repository.

pub mod cli;
pub mod http;
