//! Relaxation machinery for convex hulls of semialgebraic sets and
//! real varieties.
//!
//! Everything here reduces to one pattern: a cone of polynomials
//! described by Gram matrices (a truncated quadratic module, or sums
//! of squares modulo a truncated ideal span), intersected with the
//! affine-linear polynomials, queried either for membership of a given
//! polynomial, for the support value of the induced outer relaxation
//! in a direction, or for point membership via a normalized
//! separation program.

mod boundary;
mod qm;
pub mod replay;
mod sigma;

pub use boundary::{support_profile, support_profile_seq, SupportSample, SweepTarget};
pub use qm::{
    lasserre_point_member, lasserre_support, pushforward_support, qm_certificate_residual,
    qm_member, qm_member_is_feasible,
};
pub use sigma::{
    ideal_linear_elements, sigma_member, sigma_member_is_feasible, theta_point_member,
    theta_support,
};

use serde::Serialize;
use thiserror::Error;

use crate::poly::{CoeffMode, Monomial, PolyError, Polynomial, PolynomialDoc};
use crate::sdp::{InfeasibilityCertificate, SymMatrix};

#[derive(Debug, Error)]
pub enum RelaxError {
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Basic closed set `{x : p_1(x) >= 0, ..., p_r(x) >= 0}`.
#[derive(Debug, Clone)]
pub struct SemialgebraicSet {
    vars: Vec<String>,
    inequalities: Vec<Polynomial>,
}

impl SemialgebraicSet {
    pub fn new(inequalities: Vec<Polynomial>) -> Result<Self, RelaxError> {
        let first = inequalities
            .first()
            .ok_or_else(|| RelaxError::Input("a set needs at least one inequality".into()))?;
        let vars = first.vars().to_vec();
        let mode = first.mode();
        for p in &inequalities {
            if p.vars() != vars {
                return Err(PolyError::VarsMismatch.into());
            }
            if p.mode() != mode {
                return Err(PolyError::ModeMismatch.into());
            }
        }
        Ok(SemialgebraicSet { vars, inequalities })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn inequalities(&self) -> &[Polynomial] {
        &self.inequalities
    }

    pub fn mode(&self) -> CoeffMode {
        self.inequalities[0].mode()
    }

    /// nu: the maximum degree of the defining inequalities.
    pub fn max_degree(&self) -> u32 {
        self.inequalities
            .iter()
            .map(|p| p.degree().max(0) as u32)
            .max()
            .unwrap_or(0)
    }

    pub fn from_doc(doc: &SetDoc, mode: CoeffMode) -> Result<Self, RelaxError> {
        let polys = doc
            .inequalities
            .iter()
            .map(|p| Polynomial::from_doc(p, Some(&doc.vars), mode))
            .collect::<Result<Vec<_>, _>>()?;
        SemialgebraicSet::new(polys)
    }

    pub fn to_doc(&self) -> SetDoc {
        SetDoc {
            vars: self.vars.clone(),
            inequalities: self.inequalities.iter().map(|p| p.to_doc(false)).collect(),
        }
    }
}

/// Generators of an ideal, defining the real variety `V(I)`.
#[derive(Debug, Clone)]
pub struct IdealSpec {
    vars: Vec<String>,
    generators: Vec<Polynomial>,
}

impl IdealSpec {
    pub fn new(generators: Vec<Polynomial>) -> Result<Self, RelaxError> {
        let first = generators
            .first()
            .ok_or_else(|| RelaxError::Input("an ideal needs at least one generator".into()))?;
        let vars = first.vars().to_vec();
        let mode = first.mode();
        for p in &generators {
            if p.vars() != vars {
                return Err(PolyError::VarsMismatch.into());
            }
            if p.mode() != mode {
                return Err(PolyError::ModeMismatch.into());
            }
        }
        Ok(IdealSpec { vars, generators })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn generators(&self) -> &[Polynomial] {
        &self.generators
    }

    pub fn mode(&self) -> CoeffMode {
        self.generators[0].mode()
    }

    pub fn from_doc(doc: &IdealDoc, mode: CoeffMode) -> Result<Self, RelaxError> {
        let polys = doc
            .generators
            .iter()
            .map(|p| Polynomial::from_doc(p, Some(&doc.vars), mode))
            .collect::<Result<Vec<_>, _>>()?;
        IdealSpec::new(polys)
    }

    pub fn to_doc(&self) -> IdealDoc {
        IdealDoc {
            vars: self.vars.clone(),
            generators: self.generators.iter().map(|p| p.to_doc(false)).collect(),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SetDoc {
    pub vars: Vec<String>,
    pub inequalities: Vec<PolynomialDoc>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct IdealDoc {
    pub vars: Vec<String>,
    pub generators: Vec<PolynomialDoc>,
}

/// Gram certificate that a polynomial lies in a truncated quadratic
/// module: `f = v^T G_0 v + sum_i (v^T G_i v) p_i` over the degree-d
/// monomial basis `v`, every `G` PSD.
#[derive(Debug, Clone, Serialize)]
pub struct QMCertificate {
    pub degree: u32,
    pub basis: Vec<Monomial>,
    /// One Gram per multiplier `1, p_1, ..., p_r`.
    pub grams: Vec<SymMatrix>,
    /// Sup-norm of the float replay residual.
    pub residual: f64,
}

/// Certificate that `f = sigma + sum_j h_j g_j` with `sigma` a sum of
/// squares of degree at most `2d` and `deg(h_j g_j) <= 2d`.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaCertificate {
    pub degree: u32,
    pub basis: Vec<Monomial>,
    pub gram: SymMatrix,
    pub ideal_coeffs: Vec<Polynomial>,
    pub residual: f64,
}

/// Certificate payloads a verdict can carry.
#[derive(Debug, Clone, Serialize)]
pub enum CertificatePayload {
    QuadraticModule(QMCertificate),
    SumOfSquaresModIdeal(SigmaCertificate),
    /// Polar-cone witness for pencil verdicts: a PSD matrix `U` with
    /// the slack of `U . A <= l_0`.
    Polar { u: SymMatrix, slack: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    In,
    Out,
    NotApplicable,
    Inaccurate,
}

/// Membership answer with evidence.
///
/// `Out` always carries a separator `l`, rescaled to unit sup-norm of
/// its coefficients, with `l(x) = -margin < 0`, plus a certificate
/// that `l` belongs to the relevant cone. `In` reports the normalized
/// separation optimum as `margin`; optima inside the boundary
/// tolerance come back `In` with `low_confidence` set.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub margin: f64,
    pub separator: Option<Polynomial>,
    pub low_confidence: bool,
    pub certificate: Option<CertificatePayload>,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn inaccurate(note: impl Into<String>) -> Self {
        Verdict {
            kind: VerdictKind::Inaccurate,
            margin: f64::NAN,
            separator: None,
            low_confidence: true,
            certificate: None,
            notes: vec![note.into()],
        }
    }

    pub fn not_applicable(note: impl Into<String>) -> Self {
        Verdict {
            kind: VerdictKind::NotApplicable,
            margin: f64::NAN,
            separator: None,
            low_confidence: false,
            certificate: None,
            notes: vec![note.into()],
        }
    }

    pub fn is_in(&self) -> bool {
        self.kind == VerdictKind::In
    }

    pub fn is_out(&self) -> bool {
        self.kind == VerdictKind::Out
    }
}

/// Result of a cone-membership query for a fixed polynomial.
#[derive(Debug, Clone)]
pub enum MembershipOutcome<C> {
    Feasible(C),
    Infeasible(InfeasibilityCertificate),
    Inaccurate(String),
}

impl<C> MembershipOutcome<C> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, MembershipOutcome::Feasible(_))
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, MembershipOutcome::Infeasible(_))
    }
}

/// Result of a support-value computation.
#[derive(Debug, Clone)]
pub enum SupportOutcome {
    Value(f64),
    /// The relaxation is unbounded in the queried direction.
    Unbounded,
    Inaccurate(String),
}

impl SupportOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            SupportOutcome::Value(v) => Some(*v),
            _ => None,
        }
    }
}

/// Extracts a usable optimum from a solve, status- and
/// verification-driven: clean `Optimal` always qualifies; a stalled
/// iterate qualifies when its residuals and certified duality gap are
/// below `need`. Returns the uncertainty half-width to widen decision
/// bands with.
pub(crate) fn usable_optimum(sol: &crate::sdp::SDPSolution, need: f64) -> Option<f64> {
    use crate::sdp::Status;
    match sol.status {
        Status::Optimal => {
            let gap_abs = (sol.objective - sol.dual_objective).abs();
            Some(gap_abs.max(1e-9))
        }
        Status::Inaccurate => {
            if !sol.objective.is_finite() || !sol.dual_objective.is_finite() {
                return None;
            }
            let gap_abs = (sol.objective - sol.dual_objective).abs();
            let res = sol.residuals.primal.max(sol.residuals.dual);
            (res <= need && gap_abs <= need).then_some(gap_abs + res)
        }
        _ => None,
    }
}

/// Rescales a polynomial to unit sup-norm of coefficients; returns the
/// scale divided out. Zero polynomial comes back unchanged with scale 1.
pub(crate) fn rescale_unit_sup(p: &Polynomial) -> (Polynomial, f64) {
    let scale = p.max_abs_coeff();
    if scale <= 0.0 {
        return (p.clone(), 1.0);
    }
    let scaled = p
        .to_float()
        .scale(&crate::poly::Scalar::Float(1.0 / scale))
        .expect("float scale");
    (scaled, scale)
}

