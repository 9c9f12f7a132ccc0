//! Command-line companion to [`smc_core`]: scenario files, trajectory CSV,
//! SVG plots, JSON reports, and the `run` / `ensemble` / `analyze` /
//! `reproduce` subcommands.

pub mod commands;
pub mod figures;
pub mod plot;
pub mod report;
pub mod scenario;
pub mod trajectory_io;
