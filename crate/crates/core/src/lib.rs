// Negated comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod drive;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod krylov;
pub mod linalg;
pub mod operator;
pub mod persist;
pub mod propagation;
pub mod protocol;
pub mod register;
pub mod state;
pub mod stats;

pub use error::{Error, Result};
