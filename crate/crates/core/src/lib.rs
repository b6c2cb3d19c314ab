#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod dro;
pub mod error;
pub mod gp;
pub mod kde;
pub mod metrics;
pub mod optim;
pub mod problems;
pub mod qmc;
pub mod rng;
pub mod runner;
pub mod sobol;

pub use error::{Error, Result};
pub use rng::SeedStream;
