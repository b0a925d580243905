//! Batch front end for the crop-pest-awareness model.

pub mod config;
pub mod output;
pub mod report;
pub mod scenarios;
