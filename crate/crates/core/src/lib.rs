//! Orthonormal subgaussian directions in convex bodies: samplers, isotropic
//! normalization, marginal moment estimators, greedy direction selection and
//! a verification harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bodies;
pub mod cli;
pub mod construction;
pub mod error;
pub mod isotropy;
pub mod moments;
pub mod numerics;
pub mod rng;
pub mod sampling;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
