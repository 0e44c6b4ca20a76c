//! Periodic solutions of semilinear parabolic evolution equations at resonance.
//!
//! The crate works on finite-difference discretizations of a self-adjoint
//! elliptic operator `A` and a bounded reaction term `f(t, x, y)`, and looks
//! for `T`-periodic mild solutions of
//!
//! ```text
//! u'(t) = -A u(t) + λ u(t) + ε F(t, u(t)),    F(t, u)(x) = f(t, x, u(x))
//! ```
//!
//! as fixed points of the translation-along-trajectories operator
//! `Ψ_T(x) = u(T; x)`. When `λ` is an eigenvalue of `A` the linear part has a
//! nontrivial kernel `N_λ`, and the fixed-point index of `Ψ_T` is governed by
//! the time-averaged kernel map `g(u) = ∫_0^T P F(t, u) dt` through
//!
//! ```text
//! deg(I - Ψ_T, B(0, R)) = (-1)^(μ(λ) + dim N_λ) · deg_B(g, B(0, R) ∩ N_λ)
//! ```
//!
//! Modules:
//!
//! * [`spectral`] builds the operators, eigendecomposes them and exposes the
//!   semigroup, kernel projections and eigenvalue counts.
//! * [`nonlinearity`] parses reaction terms, evaluates the Nemytskii operator
//!   and the Landesman–Lazer functional.
//! * [`evolution`] integrates the mild-solution equation with exponential
//!   integrators in the eigenbasis.
//! * [`resonance`] computes the averaged map, Brouwer degrees and the index
//!   formula cross-check on Galerkin truncations.
//! * [`periodic`] locates and certifies periodic orbits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod nonlinearity;
pub mod periodic;
pub mod quadrature;
pub mod resonance;
pub mod spectral;

pub use error::{Error, Result};
pub use evolution::{IntegratorConfig, Propagator, Scheme, Trajectory};
pub use nonlinearity::expr::{Expression, ParseError};
pub use nonlinearity::{LlKind, LlVerdict, NemytskiiOperator, NonlinearField};
pub use periodic::{PeriodicCertificate, SolverConfig};
pub use resonance::{AveragedMap, DegreeMethod, DegreeResult, IndexCheck};
pub use spectral::{
    BoundaryCondition, Coefficient, KernelData, MultiplicityReport, OperatorSpec, ResonanceReport,
    SpatialGrid, SpectralOperator,
};

pub use nalgebra::{DMatrix, DVector};
