//! Performance evaluation of low impact development (LID) stormwater scenarios.
//!
//! The crate covers the whole chain from rainfall statistics to a ranked list
//! of design alternatives:
//!
//! - [`storm_gen`]: annual runoff control rate statistics and Chicago design storms.
//! - [`hydrology`]: Horton infiltration, nonlinear-reservoir overland flow and
//!   translation routing to outfalls.
//! - [`quality`]: saturation buildup, exponential washoff and LID removal.
//! - [`lid`]: facility catalog, static sizing arithmetic and event-scale unit simulation.
//! - [`ahp`]: pairwise-comparison weighting with consistency checks.
//! - [`evaluator`]: linear normalization, hierarchical roll-up and ranking.
//! - [`metrics`]: Nash-Sutcliffe efficiency, peak statistics, reductions.
//! - [`project`]: project files, the end-to-end pipeline and report rendering.

// `!(x >= 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ahp;
pub mod error;
pub mod evaluator;
pub mod hydrology;
pub mod lid;
pub mod metrics;
pub mod project;
pub mod quality;
pub mod storm_gen;

pub use error::{Error, Result};
