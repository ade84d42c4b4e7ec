#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod channels;
pub mod cli;
pub mod error;
pub mod eval;
pub mod gmm;
pub mod gnn;
pub mod linalg;
pub mod pilots;
pub mod rate;
pub mod structured;

pub use error::{Error, Result};
