//! Proximal minimization of geodesically convex functions on spheres of
//! curvature `kappa > 0`.
//!
//! The resolvent of `f` is `J_lambda(x) = argmin_y f(y) + Psi_x(y) / lambda`
//! with the spherical penalty `Psi_x(y) = sin^2(theta) / (kappa cos theta)`,
//! `theta = sqrt(kappa) d(x, y)`. On top of it the crate provides the proximal
//! point algorithm, its cyclic splitting variant, the large-`lambda`
//! resolvent curve, and numerical certificates for the inequalities that
//! drive their convergence.

pub mod algorithms;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod objectives;
pub mod penalties;
mod radial;
pub mod resolvent;

pub use error::{ProxError, Result};
pub use geometry::{GeodesicBall, PointSampler, SpaceConfig, SpherePoint, TangentVector};
pub use objectives::{ExtReal, Objective, ObjectiveKind};
pub use penalties::PenaltyKind;
pub use resolvent::{ResolventParams, ResolventResult};
