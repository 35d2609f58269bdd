//! Toolkit for predicting injury severity from UK-style road accident records.
//!
//! The library covers the full tabular pipeline: merging the accident /
//! vehicle / casualty source files, rule-based cleaning, feature-association
//! analysis, random-forest (MissForest-style) imputation, SMOTE resampling,
//! a class-weighted feedforward classifier, and a deep Q-learning classifier
//! that treats prediction as a sequential decision process.
//!
//! Every stage is deterministic under a fixed seed and communicates through
//! plain CSV artifacts, so stages can be re-run and inspected independently.

pub mod assoc;
pub mod clean;
pub mod eval;
pub mod fixture;
pub mod forest;
pub mod neural;
pub mod pipeline;
pub mod resample;
pub mod rl;
pub mod table;

mod seeds;

pub use seeds::derive_seed;
