//! Data-aided sensing over compressive random access.
//!
//! An access point reconstructs a field of `K` sensor readings that is sparse
//! in a DCT basis. Round 0 collects a random handful of readings; every later
//! round picks the nodes whose readings look most informative under the
//! current lasso estimate, asks for them with a single superimposed
//! signature probe, and lives with whatever missed detections and false
//! alarms the nodes' correlator tests produce.
//!
//! The crate is `no_std` (with `alloc`) and contains only computation:
//!
//! * [`scene`]: ground truth, DCT basis rows and node signature sequences.
//! * [`recovery`]: lasso by coordinate descent, least-squares debiasing.
//! * [`selection`]: random, magnitude, correlation-normalized and genie selectors.
//! * [`downlink`]: Rayleigh gains, truncated channel inversion and the request test.
//! * [`analytics`]: closed-form and quadrature error probabilities.
//! * [`engine`]: multi-round protocols and Monte-Carlo aggregation.
//!
//! File formats, presets and the command line live in the `dasense` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analytics;
pub mod downlink;
pub mod engine;
mod error;
pub mod recovery;
pub mod rng;
pub mod scene;
pub mod selection;

pub use error::{Error, Result};
