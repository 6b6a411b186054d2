//! Command-line runner for attribution evaluation.

pub mod commands;
pub mod config;
pub mod engine;
pub mod run;
pub mod serve;
