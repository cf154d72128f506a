//! Spectral solver for the Dirichlet Laplacian on twisted, straight, sheared
//! waveguides.
//!
//! The waveguide is the tube swept by a planar cross-section `S` that slides
//! along the sheared line `x ↦ (x, 0, βx)` while rotating by an angle `α(x)`.
//! After straightening the tube onto `ℝ × S` the Laplacian becomes the
//! quadratic form
//!
//! ```text
//! Q(ψ) = ∫ |∂ₓψ + (α′y₂ − β sin α) ∂₁ψ − (α′y₁ + β cos α) ∂₂ψ|² + |∇_y ψ|²
//! ```
//!
//! Eigenvalues are reported below the first eigenvalue `E₁(β)` of
//! `T(β) = −∂₁² − (1+β²)∂₂²` on `S`. That is the bottom of the essential
//! spectrum when the limiting angles `α(±∞)` leave `S` in its reference
//! orientation; otherwise the continuum can start lower, and
//! [`eigen::Diagnostics::far_field_threshold`] reports where. The crate
//! provides:
//!
//! * [`geometry`]: the immersion, its induced metric and a surface mesh;
//! * [`cross_section`]: eigenmodes of `T(β)` and the cross-section moments;
//! * [`twist`]: rotation-angle profiles `α(x)`;
//! * [`potential`]: the effective potential `V(x)`, its integral and the
//!   cut-off trial energies that witness discrete spectrum;
//! * [`assembly`]: finite-element pencils for the single-mode and coupled
//!   mode-Galerkin discretisations of `Q`;
//! * [`eigen`]: inertia counting and bisection for banded pencils;
//! * [`config`] / [`pipeline`]: batch configuration and the end-to-end runs
//!   used by the `waveguide` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod banded;
pub mod config;
pub mod cross_section;
pub mod eigen;
pub mod error;
pub mod geometry;
pub mod pipeline;
pub mod potential;
pub mod quadrature;
pub mod twist;

pub use error::{Error, Result};
