//! Constrained model reference adaptive control.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod controller;
pub mod error;
pub mod feasibility;
pub mod models;
pub mod numerics;
pub mod plot;
pub mod signals;
pub mod sim;

pub use error::{Error, Result};
