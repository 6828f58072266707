//! Central tolerance and limit constants.
//!
//! Every numeric threshold used by the solvers and verdict logic is
//! defined here so that verdicts are reproducible and auditable.

/// Relative duality-gap and residual target for interior-point solves.
pub const SOLVER_TOL: f64 = 1e-8;

/// Eigenvalue slack below which a matrix is still accepted as PSD.
pub const PSD_SLACK: f64 = 1e-9;

/// Iteration cap for the interior-point solver.
pub const MAX_ITER: usize = 200;

/// Feasibility threshold on the auxiliary infeasibility slack: a
/// feasibility SDP is declared feasible iff the optimal slack is below
/// this value.
pub const FEAS_TOL: f64 = 1e-7;

/// Membership boundary tolerance on the normalized separation optimum.
/// Optima in `(-MEMBER_TOL, MEMBER_TOL)` are classified `In` with a
/// low-confidence flag.
pub const MEMBER_TOL: f64 = 1e-7;

/// Maximum certificate residual accepted when an SDP reports success.
pub const CERT_RESIDUAL: f64 = 1e-7;

/// Maximum residual for exact replay of a rounded certificate.
pub const REPLAY_RESIDUAL: f64 = 1e-6;

/// Active-constraint tolerance for obstruction checks in float mode.
/// Exact mode requires exact zero.
pub const ACTIVE_TOL: f64 = 1e-9;

/// Minimum margin for a strict-feasibility witness.
pub const STRICT_FEAS_MIN: f64 = 1e-6;

/// Default bounding box half-width for existential variables in
/// projection membership.
pub const DEFAULT_BOX: f64 = 1e3;

/// Number of line samples used when probing the relative interior of a
/// set restricted to a line.
pub const LINE_SAMPLES: usize = 1001;
