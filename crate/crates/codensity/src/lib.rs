//! File formats, reports, interactive plays, the command line and the HTTP
//! service on top of `codensity-core`.

pub mod cli;
pub mod error;
pub mod export;
pub mod format;
pub mod report;
pub mod server;
pub mod session;
