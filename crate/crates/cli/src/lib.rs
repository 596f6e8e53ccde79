//! Run configuration, artifact bookkeeping and the subcommands of the
//! `semtrans` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod session;

pub use config::{RunConfig, CONFIG_ENV};
pub use error::{CliError, Result};
pub use manifest::{Manifest, RunDir};
pub use session::Session;
