//! Ginzburg–Landau vortex laboratory: equivariant profiles, lattice gauge
//! fields, gradient and Hamiltonian evolution, vortex tracking, and the
//! finite-dimensional effective dynamics of well-separated vortices.

pub mod asymptotics;
pub mod effective;
pub mod error;
pub mod evolve;
pub mod fit;
pub mod lattice;
pub mod quadrature;
pub mod radial;
pub mod special;
pub mod tracking;

pub use error::{Error, Result};
