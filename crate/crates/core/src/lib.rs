//! Numerical renormalization-group solver for the long-time asymptotics of
//! one-dimensional nonlinear diffusion equations with periodic coefficients,
//!
//! ```text
//! u_t = [1 + mu g(x)] u_xx + lambda u^a u_x^b u_xx^c,
//! ```
//!
//! its divergence-form variant and Barenblatt's equation. Each RG iteration
//! integrates the renormalized equation over `t in [1, L]`, reads the decay
//! exponent off the value at the origin, and rescales amplitude and mesh.
//! The fixed point of the iteration gives the decay exponent `alpha`, the
//! effective diffusivity `sigma` and the prefactor `A`.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod engine;
pub mod equations;
pub mod error;
pub mod grid;
pub mod runner;
pub mod stepper;

pub use diagnostics::{
    barenblatt_alpha_first_order, gaussian_profile, harmonic_mean, relevant_alpha, sigma_fit,
    SigmaFit,
};
pub use engine::{
    rg_step, run, BetaPolicy, RGState, RgSettings, RunFailure, RunReport, StopRule, Summary,
    TraceRecord,
};
pub use equations::{
    EquationForm, EquationSpec, InitialCondition, InitialShape, MonomialTerm, PeriodicCoefficient,
    RGCoefficients, Relevance,
};
pub use error::{Result, RgError};
pub use grid::{rel_diff, Field, Grid, Norm};
pub use stepper::{evolve, stable_dt, tail_trim, StepperConfig};
