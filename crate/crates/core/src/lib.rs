#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod band;
pub mod construct;
pub mod entire;
pub mod error;
pub mod expr;
pub mod grid;
pub mod nonlinearity;
pub mod plap;
pub mod quad;
pub mod tail;

pub use error::{Error, Result};
