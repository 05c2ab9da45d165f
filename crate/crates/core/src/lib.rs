//! Numerical laboratory for weak measurements on pre- and post-selected
//! quantum systems with Gaussian pointers.
//!
//! The crate simulates the pointer statistics a weak von Neumann coupling
//! leaves behind after post-selection, and recovers single and joint weak
//! values from those statistics using only local, single-particle
//! couplings: the joint value of `AB` is read from the `XY` and `X P_y`
//! correlations of a two-axis pointer.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod engines;
pub mod error;
pub mod pointer;
pub mod qcore;
pub mod scenarios;
pub mod validate;
pub mod weakvalues;

pub use error::{Error, Result};
