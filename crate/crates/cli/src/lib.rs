//! Scenario-driven front end for the cutwave solver: configuration parsing,
//! run orchestration, and file outputs.

pub mod config;
pub mod io;
pub mod scenarios;
