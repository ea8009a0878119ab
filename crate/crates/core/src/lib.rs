//! Orthonormal polynomials of a compactly supported measure and the
//! dynamics of those polynomials.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; file formats, the command line and thread pools
//! live in the `brolin-lab` companion crate, which plugs a parallel
//! [`exec::Exec`] implementation into the same entry points.
//!
//! Module map:
//!
//! * [`measure`]: measures, quadrature proxies, potentials, energies.
//! * [`orthopoly`]: orthonormal bases `P_n = γ_n z^n + ...` and their checks.
//! * [`dynamics`]: escape radius, Green's function, filled Julia grids,
//!   preimages and backward-iteration sampling of the maximal-entropy measure.
//! * [`equilibrium`]: filled hulls of grid sets and equilibrium measures.
//! * [`lab`]: the degree sweep and its convergence diagnostics.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod grid;
pub mod lab;
pub mod linalg;
pub mod math;
pub mod measure;
pub mod orthopoly;
pub mod precision;
pub mod roots;
pub mod stats;
#[cfg(feature = "serde")]
pub mod serde_ext;

pub use error::{Error, Result};
pub use num_complex::Complex64;
