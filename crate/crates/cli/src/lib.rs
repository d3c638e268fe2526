//! Experiment harness behind the `arqsched` command: configuration, table
//! and figure presets, and CSV artifacts.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod figure;
pub mod presets;
pub mod table;
