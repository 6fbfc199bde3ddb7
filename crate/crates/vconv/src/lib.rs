//! Numeric laboratory for V-convergence on function spaces: semidistances
//! over shrinking neighborhood scales, convergence-mode classification,
//! series rules, closure defects, and a corpus of example families.

pub mod closure;
pub mod config;
pub mod convergence;
pub mod corpus;
pub mod error;
pub mod report;
pub mod runner;
pub mod space;
pub mod verdict;
pub mod vmetric;

pub use error::{Error, Result};
pub use verdict::Verdict;
