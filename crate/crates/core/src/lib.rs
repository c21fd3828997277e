//! Steady-state analysis of bistable lattice dynamical systems on rings.
//!
//! The crate traces how spatially localized equilibria of
//! `u̇_n = d (Δ_m U)_n + f(u_n, μ)` on an `N`-node ring reorganize as the
//! bifurcation parameter `μ` varies at small fixed coupling `d`. It provides
//!
//! * the ring model itself ([`model`]): bistable nonlinearities, the
//!   `m`-nearest-neighbour coupling operator, residuals and Jacobians;
//! * the anti-continuum pattern catalogue ([`patterns`]) and a
//!   max-norm classifier for branch labelling;
//! * fixed-point-space reductions ([`reduction`]): the flip-invariant
//!   restriction and the two-block reduction for all-to-all coupling;
//! * a damped Newton corrector and bordered solves ([`solver`]);
//! * pseudo-arclength continuation with fold / branch-point detection,
//!   branch switching, and stability labelling ([`continuation`]);
//! * closed-form fold and branch-point location laws plus a power-law
//!   fitting harness for verifying them ([`asymptotics`]);
//! * multi-branch diagram assembly and classification ([`diagram`]).
//!
//! The crate is `no_std` + `alloc`; IO, file formats, and the command-line
//! front end live in the companion `ring-snake` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod asymptotics;
pub mod continuation;
pub mod diagram;
pub mod linalg;
pub mod model;
pub mod patterns;
pub mod reduction;
pub mod solver;

pub use continuation::{Branch, BranchEvent, ContinuationOptions, EventKind, SteadySystem};
pub use diagram::{Diagram, DiagramMode, GammaMatch};
pub use model::{Nonlinearity, NonlinearityKind, RingModel, StatePoint};
pub use patterns::PatternLabel;
pub use reduction::SymmetryReduction;
pub use solver::{NewtonOptions, ParametricSystem};
