#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod cli;
pub mod data;
pub mod encoder;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod net;
pub mod rng;
pub mod selftest;
pub mod svm;

pub use error::{Error, Result};
