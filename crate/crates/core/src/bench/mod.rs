//! Workload generation, replay engines and comparison reporting.

pub mod calibrate;
pub mod engine;
pub mod report;
pub mod verify;
pub mod workload;
