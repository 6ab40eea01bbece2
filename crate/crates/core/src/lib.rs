#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod discretize;
pub mod error;
pub mod frac;
pub mod freq;
pub mod poly;
pub mod sim;
pub mod tf;
pub mod tuning;

pub use error::{Error, Result};
