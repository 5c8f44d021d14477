//! Riemannian geometry of autonomous second-order ODEs `u'' = phi(u, u')`
//! on the first-order jet bundle.

// `!(x > 0.0)` rejects NaN together with the bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ad;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod integrate;
pub mod lagrangian;
pub mod par;
pub mod quadrature;
pub mod registry;
pub mod sampling;
pub mod table;

pub use error::{Error, Result};
