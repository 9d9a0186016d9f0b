//! Numerical laboratory for contact Hamilton-Jacobi equations
//! `w_t + H(x, w, w_x) = 0` on the one-dimensional circle, for Hamiltonians
//! strictly decreasing in the unknown.
//!
//! The crate provides, generically over the scalar type:
//!
//! - a catalog of contact Hamiltonians with their Lagrangians and convex
//!   duality ([`model`]);
//! - periodic grids and grid-function algebra ([`grid`]);
//! - the backward and forward solution semigroups by semi-Lagrangian dynamic
//!   programming with per-step implicit fixed points ([`semigroup`]);
//! - implicit action functions with point data, their inversion relation and
//!   discrete minimizing curves ([`action`]);
//! - a characteristic-flow shooting oracle independent of the grid
//!   ([`characteristics`]);
//! - a monotone Lax-Friedrichs cross-check solver ([`fd`]);
//! - weak KAM objects and the finite-time convergence experiments
//!   ([`weakkam`]).

pub mod action;
pub mod characteristics;
pub mod error;
pub mod fd;
pub mod grid;
pub mod model;
pub mod real;
pub mod semigroup;
pub mod weakkam;

pub use error::{Error, Result};
pub use real::Real;

// Concrete aliases for the two supported scalar types.
pub type GridFunction64 = grid::GridFunction<f64>;
pub type GridFunction32 = grid::GridFunction<f32>;
pub type ContactHamiltonian64 = model::ContactHamiltonian<f64>;
pub type ContactHamiltonian32 = model::ContactHamiltonian<f32>;
pub type ContactLagrangian64 = model::ContactLagrangian<f64>;
pub type Semigroup64 = semigroup::Semigroup<f64>;
pub type Semigroup32 = semigroup::Semigroup<f32>;
pub type SemigroupParams64 = semigroup::SemigroupParams<f64>;
pub type EvolutionTrace64 = semigroup::EvolutionTrace<f64>;
pub type ActionField64 = action::ActionField<f64>;
pub type FdSolver64 = fd::FdSolver<f64>;
pub type Trajectory64 = characteristics::Trajectory<f64>;
pub type ReachReport64 = weakkam::ReachReport<f64>;
