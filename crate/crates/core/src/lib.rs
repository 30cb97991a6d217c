//! Symbolic verification engine for Lie algebroids, adjusted connections and
//! their gauge theory.
//!
//! The crate is `no_std` (it needs `alloc`). Coefficients are exact rational
//! functions over a chart with opaque field symbols; graded algebras carry
//! Koszul signs; every identity is checked by canonical-form comparison, with
//! a seeded numeric fallback for transcendental expressions.

#![no_std]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod coeff;
pub mod error;
pub mod gca;
pub mod algebroid;
pub mod adjust;
pub mod gauge;
pub mod cocycle;
pub mod tensor;
pub mod catalog;
