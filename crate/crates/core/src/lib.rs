#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Tropical logistic regression over phylogenetic tree space.
//!
//! Points of the tropical projective torus are stored in the chart whose last
//! coordinate is zero; every module exchanges [`tropical::TorusPoint`] values.

pub mod chains;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod fermat_weber;
pub mod regression;
pub mod rng;
pub mod sampling;
pub mod special;
pub mod treeio;
pub mod tropical;

pub use error::{Error, Result};
pub use tropical::TorusPoint;
