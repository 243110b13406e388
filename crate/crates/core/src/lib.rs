//! Random walks in quasi-periodic environments on the integers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod circlemap;
pub mod constructions;
pub mod engine;
pub mod environment;
pub mod error;
pub mod frequency;
pub mod numerics;
pub mod parallel;
pub mod potential;
pub mod scenario;

pub use error::{Error, Result};
