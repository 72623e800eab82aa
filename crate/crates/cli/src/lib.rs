//! Spec-file driver for plate density optimization.

pub mod batch;
pub mod run;
pub mod spec;
