//! Config-driven front end for the verification engine: job files in, JSON or
//! Markdown reports out.

pub mod cli;
pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{Format, JobConfig};
pub use error::CliError;
pub use report::Report;
pub use run::{run, Job};
