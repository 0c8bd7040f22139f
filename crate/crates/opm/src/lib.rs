//! Non-Markovian optimal-parameterizing-manifold reduction for stochastically
//! forced dissipative PDEs.
//!
//! The crate covers the full pipeline: spectral bases and interaction
//! tensors, seeded noise generation with auxiliary memory equations,
//! full-model reference solvers, tau-parameterized stochastic
//! parameterizations with their defect-based training, reduced (closure)
//! model integration, ensemble statistics, and steady-state continuation.

pub mod bifurcation;
pub mod chebyshev;
pub mod defect;
pub mod ensemble;
pub mod error;
pub mod forcing;
pub mod grid;
pub mod parameterization;
pub mod pipeline;
pub mod reduced;
pub mod rng;
pub mod solver;
pub mod spectral;

pub use error::{OpmError, Result};
