//! Numerical laboratory for finite-time blow-up of the radial semilinear wave
//! equation `u_tt = Δu + |u|^{p-1}u + f(u)` in the super-conformal range
//! `1 + 4/(N-1) < p < 1 + 4/(N-2)`.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. It provides:
//!
//! - [`params`]: problem constants and the derived quantities `η`, `κ0`.
//! - [`grid`]: uniform radial grids with ball and sphere quadrature.
//! - [`physical`]: leapfrog evolution in `(r, t)` and blow-up time estimation.
//! - [`similarity`]: explicit evolution in similarity variables `(y, s)` on
//!   the unit ball, with the degenerate outflow boundary at `|y| = 1`.
//! - [`transform`]: the self-similar change of variables and frame shifts.
//! - [`energy`]: the functionals `E0`, `I`, `E`, `F` and checks of their
//!   derivative identities along trajectories.
//! - [`analysis`]: growth and decay diagnostics with exponent fitting.

#![no_std]
#![deny(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod energy;
pub mod error;
pub mod grid;
mod interp;
pub mod params;
pub mod physical;
pub mod similarity;
pub mod state;
pub mod transform;

pub use error::{Error, Result};
pub use grid::RadialGrid;
pub use params::{Params, PerturbationSpec};
pub use state::{PhysicalState, SimilarityState};
