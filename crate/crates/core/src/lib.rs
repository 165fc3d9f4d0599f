//! Desk-scale simulator of a rural wireless living lab.
//!
//! Modules cover RAN and x-haul link budgets under weather, MU-MIMO user
//! grouping, free-space optical alignment, protocol-stack delay analytics,
//! fountain-coded transport, lease/guard orchestration, and synthetic
//! telemetry. [`scenario::run_scenario`] ties them into reproducible runs.

pub mod domain;
pub mod fsoc;
pub mod ltl;
pub mod mimo;
pub mod orchestrator;
pub mod radio;
pub mod scenario;
pub mod stack;
pub mod telemetry;
pub mod units;
pub mod xhaul;
