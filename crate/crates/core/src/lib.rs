pub mod config;
pub mod cutoff;
pub mod error;
pub mod filled;
pub mod grid;
pub mod harness;
pub mod report;
pub mod splicing;
pub mod weighted;

pub use error::{Result, SpliceError};
