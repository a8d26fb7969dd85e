#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod bench;
pub mod error;
pub mod linalg;
pub mod linesearch;
pub mod model;
pub mod ops;
pub mod oracle;
pub mod problems;
pub mod solvers;

pub use error::{Error, Result};
