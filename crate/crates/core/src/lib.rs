// `!(x > 0.0)` guards reject NaN along with nonpositive values; the
// `x <= 0.0` form clippy prefers does not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classification;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod rates;
pub mod spectral;
pub mod witness;

pub use error::{Error, Result};
