//! Configuration and command implementations behind the `graphair` binary.

pub mod commands;
pub mod config;
