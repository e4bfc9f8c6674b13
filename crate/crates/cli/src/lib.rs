//! Scenario files, sweeps and CSV reports for the `tbound` command.

pub mod config;
pub mod report;
pub mod sweep;
