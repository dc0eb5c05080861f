//! Allocation rules for lending a fixed supply of shares to clients who
//! report uncertain demand.

// Parameter checks are written `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auction;
pub mod dpcount;
pub mod error;
pub mod greedy;
pub mod mechanism;
pub mod model;
pub mod privauc;

pub use error::{Error, Result};
pub use model::{Allocation, ConditionalDistribution, Pmf, RoundRecord, Valuation};
