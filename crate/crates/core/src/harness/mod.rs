//! Scenario runner: builds a geometry, runs the checks and collects a report.

pub mod config;
pub mod report;
pub mod scenarios;

pub use config::{Format, ScenarioConfig, SCENARIOS, SEED_ENV};
pub use report::{checks_from_csv, checks_to_csv, emit_report, Check, Fitted, Provenance, Side, VerificationReport};
pub use scenarios::run_scenario;
