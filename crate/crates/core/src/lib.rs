//! Horizontal vector fields, Hardy-constant lower bounds and their numerical verification
//! on step-two Carnot groups.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod error;
pub mod group;
pub mod norms;
pub mod optimize;
pub mod quadrature;
pub mod verify;
pub mod zfield;

pub use error::{Error, Result};
