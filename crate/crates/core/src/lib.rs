//! Simulation toolkit for super-Brownian motions and super-random walks whose
//! branching is driven by a catalytic medium.
//!
//! The crate provides:
//!
//! - catalyst construction (stable random measures, dyadic layer reductions,
//!   density catalysts, i.i.d. uniform lattice catalysts) in [`catalyst`],
//! - reactant motion (Brownian paths, continuous-time simple random walks)
//!   and path statistics (local time, occupation, hitting cycles) in [`motion`],
//! - the collision-local-time branching clock and its inverse time change in
//!   [`clt`],
//! - exact Feller branching diffusion sampling in [`feller`],
//! - the mass-1/N branching particle approximation with genealogy, stopped
//!   measures and good/bad path classification in [`particle`],
//! - explicit stage schedules and their numeric hypothesis checks in
//!   [`schedules`],
//! - a deterministic log-Laplace reaction-diffusion solver in [`pde`],
//! - the experiment harness and CLI plumbing in [`harness`].

pub mod catalyst;
pub mod clt;
pub mod error;
pub mod feller;
pub mod harness;
pub mod motion;
pub mod particle;
pub mod pde;
pub mod rng;
pub mod schedules;
pub mod stats;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
