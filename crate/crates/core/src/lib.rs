//! Goodness-of-fit testing for the functional linear model with functional
//! response.
//!
//! The crate provides the projected Cramér–von Mises (PCvM) statistic in
//! closed form, four regularized estimators of the regression kernel, a
//! golden-section wild bootstrap, simulation of the standard benchmark
//! processes, and brute-force Monte Carlo oracles that cross-check the
//! closed forms.

pub mod error;
pub mod fdata;
pub mod gof;
pub mod io;
pub mod oracle;
pub mod pcvm;
pub mod regfit;
pub mod rng;
pub mod simgen;

pub use error::{Error, Result};
