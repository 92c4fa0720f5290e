//! Weighted labeling for classifier-derived outcomes.
//!
//! A multinomial classifier is fit on a development cohort, per-class conformal
//! thresholds turn its probabilities into label sets, and a bootstrap draws one
//! label per set to carry label uncertainty into downstream estimates such as
//! classification metrics and Kaplan-Meier summaries.

pub mod bootstrap;
pub mod conformal;
pub mod error;
pub mod estimators;
pub mod io;
pub mod labeling;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod simgen;
pub mod survival;
pub mod targets;
pub mod types;

pub use error::{Error, Result};
pub use rng::RngSpec;
pub use types::{
    ClassProbabilities, ColumnKind, FeatureMatrix, LabelSet, LabelSpace, LabeledDataset, SurvivalData, Violation,
};
