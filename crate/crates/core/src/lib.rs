//! Numerical toolkit for a fisheries mean-field game on the torus.
//!
//! The model couples three fields: the fish density theta (a logistic
//! reaction-diffusion equation with a nonlocal harvesting sink), the
//! fisherman density m (a Fokker-Planck equation driven by the optimal
//! drift) and the value function u (a backward Hamilton-Jacobi-Bellman
//! equation with quadratic Hamiltonian whose right-hand side is the
//! smoothed fish density). The crate provides:
//!
//! - discrete calculus on periodic grids ([`grid`], [`kernel`]),
//! - principal-eigenvalue solvers ([`spectral`]),
//! - the fish population solvers and diagnostics ([`logistic`]),
//! - backward HJB and forward FPK solvers plus particles ([`hjb`], [`fpk`]),
//! - the equilibrium fixed point with its monotonicity/sensitivity suite
//!   ([`mfg`]),
//! - stationary (ergodic) solutions, including closed forms in 1D
//!   ([`ergodic`]),
//! - long-horizon rescaling experiments ([`longtime`]),
//! - field serialization and run dumps ([`io`]) and the acceptance
//!   checks ([`accept`]).

pub mod accept;
pub mod ergodic;
pub mod error;
pub mod fpk;
pub mod grid;
pub mod hjb;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod logistic;
pub mod longtime;
pub mod mfg;
pub mod profile;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{
    divergence, gradient, laplacian, upwind_advection_div, upwind_directional_derivative,
    upwind_grad_sq, DirectionRule, EdgeVelocities, Field, TimeField, TimeVectorField, TorusGrid,
    VectorField,
};
pub use kernel::{Kernel, KernelSpec};
pub use profile::{CosineSeries, PeriodicSpline, Profile1d};
