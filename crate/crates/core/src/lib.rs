//! Numerics for ultrastrong light-matter coupling near superradiant and
//! spectral-collapse critical points.
//!
//! Everything here is a pure function of its inputs and builds without `std`
//! (an allocator is required). The `std` feature only forwards to the
//! dependencies.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod dissipative;
pub mod effective;
pub mod error;
pub mod fit;
pub mod fock;
pub mod gaussian;
pub mod linalg;
pub mod ode;
pub mod protocol;
pub mod quad;
pub mod special;
pub mod sw;

pub use error::{Error, Result};
pub use linalg::{CMat, RMat, C64};
