//! File formats, configuration, multi-chain training and the command-line
//! front end around `msnt-core`.

pub mod chains;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod export;
pub mod jsonl;
pub mod manifest;

pub use error::{Error, Result};
