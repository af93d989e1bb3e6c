//! Numerical solver and analytic certificates for coupled Hilfer fractional
//! Langevin systems with nonlocal integral boundary conditions.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the
//! command-line front end live in the `hilfer-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod certificates;
pub mod expr;
pub mod fixtures;
pub mod fracops;
pub mod model;
pub mod solver;
pub mod stability;
