//! Command-line front end for the `pada` library: CSV input, model bundles
//! and the subcommand bodies used by the `pada` binary.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod csvio;
