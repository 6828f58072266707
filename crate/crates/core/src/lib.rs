//! Semidefinite descriptions of convex hulls at desk scale.
//!
//! This crate computes outer approximations of convex hulls of
//! semialgebraic sets and real varieties through small dense
//! semidefinite programs:
//!
//! - [`poly`] — sparse multivariate polynomials with exact-rational or
//!   float coefficients, the substrate for every Gram-matrix identity.
//! - [`sdp`] — a dense primal-dual interior-point solver for block SDPs
//!   with free scalar variables, plus a symmetric eigensolver.
//! - [`relax`] — truncated quadratic-module membership, Lasserre
//!   relaxation queries, theta-body queries, and pushforward supports.
//! - [`pencil`] — linear matrix polynomials: spectrahedron and
//!   projection membership, polars, closures, and the matrix
//!   quadratic-module cone attached to a projection.
//! - [`obstruct`] — symbolic detectors for the geometric obstructions
//!   that prevent the relaxation hierarchies from closing at any finite
//!   degree.
//!
//! Batch direction sweeps ([`relax::support_profile`]) run in parallel
//! via rayon when the default `parallel` feature is enabled; a
//! sequential fallback is always available.

pub mod bundled;
pub mod obstruct;
pub mod pencil;
pub mod poly;
pub mod relax;
pub mod sdp;
pub mod tolerances;

pub use poly::{CoeffMode, Monomial, Point, Polynomial, Scalar};
