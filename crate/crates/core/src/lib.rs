//! Equations of motion for a radiating classical electron.

// Guards are written as !(x > 0.0) so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod causality;
pub mod error;
pub mod nonrel;
pub mod ode;
pub mod phys;
pub mod rel;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
