//! Command-line front end and HTTP analysis service for the `sai` engine.

pub mod api;
pub mod cli;
