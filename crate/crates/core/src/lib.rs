//! Explaining black-box classifiers with small relational programs:
//! probe the model, synthesize a consistent program, render it as clauses
//! and English, and measure how well it agrees with the model.

pub mod blackbox;
pub mod cnp;
pub mod error;
pub mod exec;
pub mod jobfile;
pub mod probing;
pub mod synthesis;
pub mod translate;
pub mod validate;

pub use error::{Error, Result};
