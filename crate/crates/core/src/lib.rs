//! Numerical toolkit for closed orbits of central force problems and the
//! persistence of their periodic manifolds under small perturbations.
//!
//! The crate is `no_std` with `alloc`.

#![no_std]

extern crate alloc;

pub mod actions;
pub mod continuation;
pub mod error;
pub mod flow;
pub mod math;
pub mod model;
pub mod nondeg;
pub mod orbit;

pub use error::{Error, Result};
pub use model::{Dim, HamiltonianSystem, KineticLaw, PhaseState, Potential};
