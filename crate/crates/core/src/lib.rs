//! Crowd answer aggregation from votes, confidences and predicted support.
//!
//! Baseline rules, per-response (RCR) and per-answer (ACR) feature
//! extraction, probabilistic learners over those features, the
//! classifier-driven aggregators, an evaluation harness and a synthetic
//! crowd generator.

pub mod aggregators;
pub mod baselines;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod learners;
pub mod methods;
pub mod model;
pub mod result;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
