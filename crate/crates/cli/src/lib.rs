//! Scenario handling, figure datasets and verification reports built on
//! `squeezelax_core`.

pub mod config;
pub mod dataset;
pub mod error;
pub mod figures;
pub mod pool;
pub mod runs;
pub mod verify;

pub use error::{AppError, AppResult};
