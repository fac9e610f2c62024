//! Sampled verification of generalized-metric axioms, comparison-function
//! classes, contraction conditions and Picard iteration on desk-scale spaces.

// Negated float comparisons are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod expr;
pub mod gauge;
pub mod phi;
pub mod picard;
pub mod seqlab;
pub mod space;
pub mod verdict;

pub use error::{Error, Result};
