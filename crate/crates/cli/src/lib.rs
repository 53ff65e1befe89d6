//! Command-line front end for the `tarsim` review simulator.

pub mod args;
pub mod commands;
pub mod output;
pub mod report;
