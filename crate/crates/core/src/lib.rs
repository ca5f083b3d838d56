//! Benchmarking toolkit for synthetic binary phenotype data.
//!
//! Real and synthetic patient records are reduced to N x K binary phenotype
//! matrices ([`corpus`]), two reference generators supply comparison points
//! ([`baselines`]), and three metric families score a synthetic matrix
//! against the real one: [`fidelity`], [`utility`] and [`privacy`]. The
//! [`orchestrator`] ties them into config-driven runs, scaling curves and
//! method rankings.

pub mod baselines;
pub mod corpus;
pub mod error;
pub mod fidelity;
pub mod ml;
pub mod orchestrator;
pub mod privacy;
pub mod seed;
pub mod utility;

pub use error::{Error, Result};
