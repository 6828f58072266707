//! Linear matrix polynomials and their derived convex bodies.
//!
//! A pencil `A(X, Y) = A + sum_i X_i B_i + sum_j Y_j C_j` defines a
//! spectrahedron in `(x, y)` and, after projecting out `y`, a
//! spectrahedral shadow `S` in `x`. This module decides membership in
//! the spectrahedron, the shadow, and the shadow's closure, computes
//! the polar cone of affine-linear polynomials nonnegative on `S`, and
//! decides membership in the matrix quadratic-module cone attached to
//! the pencil (nonnegativity certificates of degree-bounded polynomial
//! vectors).

use serde::{Deserialize, Serialize};

use crate::poly::{monomial_basis, CoeffMode, Monomial, Polynomial, Scalar};
use crate::relax::{CertificatePayload, RelaxError, Verdict, VerdictKind};
use crate::sdp::{
    self, eigmin, svec, svec_len, Constraint, InfeasibilityCertificate, SDPProblem, Sense, Status,
    SymMatrix,
};
use crate::tolerances::{DEFAULT_BOX, FEAS_TOL, MEMBER_TOL, SOLVER_TOL, STRICT_FEAS_MIN};

/// `A + sum X_i B_i + sum Y_j C_j`, all coefficients symmetric `k x k`.
#[derive(Debug, Clone)]
pub struct MatrixPencil {
    k: usize,
    a: SymMatrix,
    b: Vec<SymMatrix>,
    c: Vec<SymMatrix>,
}

/// Witness for the polar cone: `l = U . A'(X) + r` with `U` PSD,
/// `U . B_i = l_i`, `U . C_j = 0`, and slack `r = l_0 - U . A >= 0`.
#[derive(Debug, Clone, Serialize)]
pub struct PolarCertificate {
    pub u: SymMatrix,
    pub slack: f64,
}

/// Certificate that a polynomial lies in the pencil's matrix
/// quadratic-module cone at degree `d`: `p = A'(X) . M(X) + sigma(X)`
/// where `M(X)` comes from one big PSD Gram over the tensor basis
/// (matrix row index times degree-d monomial), `C_j . M(X) = 0` as
/// polynomial identities, and `sigma` is a sum of squares.
#[derive(Debug, Clone, Serialize)]
pub struct PencilQmCertificate {
    pub degree: u32,
    pub basis: Vec<Monomial>,
    /// `(k * N_d) x (k * N_d)` PSD Gram defining `M(X)`.
    pub big_gram: SymMatrix,
    /// SOS Gram for `sigma`.
    pub sos_gram: SymMatrix,
    pub residual: f64,
}

/// Outcome of strict-feasibility search.
#[derive(Debug, Clone)]
pub enum StrictFeasibility {
    /// A point with `A(x, y)` positive definite, and the margin.
    Strict { point: Vec<f64>, margin: f64 },
    NotStrict,
    Inaccurate(String),
}

/// Outcome of a pencil-cone membership query.
#[derive(Debug, Clone)]
pub enum PencilQmOutcome {
    Feasible(PencilQmCertificate),
    Infeasible(InfeasibilityCertificate),
    Inaccurate(String),
}

/// Outcome of a polar-cone membership query.
#[derive(Debug, Clone)]
pub enum PolarOutcome {
    Feasible(PolarCertificate),
    Infeasible(InfeasibilityCertificate),
    /// The pencil is not strictly feasible; the polar description
    /// does not apply.
    NotApplicable(String),
    Inaccurate(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PencilDoc {
    pub k: usize,
    pub nx: usize,
    pub ny: usize,
    /// Entries as coefficient strings; symmetry is validated exactly.
    pub a: Vec<Vec<String>>,
    pub b: Vec<Vec<Vec<String>>>,
    pub c: Vec<Vec<Vec<String>>>,
}

fn parse_matrix_exact(rows: &[Vec<String>], k: usize, what: &str) -> Result<SymMatrix, RelaxError> {
    if rows.len() != k || rows.iter().any(|r| r.len() != k) {
        return Err(RelaxError::Input(format!("{what}: expected a {k}x{k} matrix")));
    }
    let mut exact = vec![vec![Scalar::zero(CoeffMode::Exact); k]; k];
    for (i, row) in rows.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            exact[i][j] = Scalar::parse(s, CoeffMode::Exact)?;
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            if exact[i][j] != exact[j][i] {
                return Err(RelaxError::Input(format!(
                    "{what}: entry ({i},{j}) is not symmetric to ({j},{i})"
                )));
            }
        }
    }
    let mut m = SymMatrix::zeros(k);
    for i in 0..k {
        for j in 0..k {
            let v = exact[i][j].to_f64();
            if i <= j {
                m.set(i, j, v);
            }
        }
    }
    Ok(m)
}

impl MatrixPencil {
    pub fn new(a: SymMatrix, b: Vec<SymMatrix>, c: Vec<SymMatrix>) -> Result<Self, RelaxError> {
        let k = a.dim();
        if b.iter().chain(&c).any(|m| m.dim() != k) {
            return Err(RelaxError::Input(
                "all pencil coefficient matrices must share one dimension".into(),
            ));
        }
        Ok(MatrixPencil { k, a, b, c })
    }

    pub fn from_doc(doc: &PencilDoc) -> Result<Self, RelaxError> {
        let a = parse_matrix_exact(&doc.a, doc.k, "A")?;
        if doc.b.len() != doc.nx || doc.c.len() != doc.ny {
            return Err(RelaxError::Input(format!(
                "expected {} B and {} C matrices, found {} and {}",
                doc.nx,
                doc.ny,
                doc.b.len(),
                doc.c.len()
            )));
        }
        let b = doc
            .b
            .iter()
            .enumerate()
            .map(|(i, m)| parse_matrix_exact(m, doc.k, &format!("B[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let c = doc
            .c
            .iter()
            .enumerate()
            .map(|(j, m)| parse_matrix_exact(m, doc.k, &format!("C[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        MatrixPencil::new(a, b, c)
    }

    pub fn to_doc(&self) -> PencilDoc {
        let fmt = |m: &SymMatrix| -> Vec<Vec<String>> {
            m.rows()
                .iter()
                .map(|r| r.iter().map(|v| format!("{v}")).collect())
                .collect()
        };
        PencilDoc {
            k: self.k,
            nx: self.nx(),
            ny: self.ny(),
            a: fmt(&self.a),
            b: self.b.iter().map(fmt).collect(),
            c: self.c.iter().map(fmt).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn nx(&self) -> usize {
        self.b.len()
    }

    pub fn ny(&self) -> usize {
        self.c.len()
    }

    pub fn a_matrix(&self) -> &SymMatrix {
        &self.a
    }

    pub fn b_matrices(&self) -> &[SymMatrix] {
        &self.b
    }

    pub fn c_matrices(&self) -> &[SymMatrix] {
        &self.c
    }

    /// Evaluates `A(x, y)`.
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> SymMatrix {
        assert_eq!(x.len(), self.nx());
        assert_eq!(y.len(), self.ny());
        let mut m = self.a.clone();
        for (coef, mat) in x.iter().zip(&self.b).chain(y.iter().zip(&self.c)) {
            m = m.add(&mat.scale(*coef));
        }
        m
    }

    /// `A'(x) = A(x, 0)`.
    pub fn evaluate_x(&self, x: &[f64]) -> SymMatrix {
        self.evaluate(x, &vec![0.0; self.ny()])
    }

    /// Spectrahedron membership of a full `(x, y)` point: true iff the
    /// smallest eigenvalue of `A(x, y)` clears `-PSD_SLACK`.
    pub fn member(&self, x: &[f64], y: &[f64]) -> (bool, f64) {
        let (lam, _) = eigmin(&self.evaluate(x, y));
        (lam >= -crate::tolerances::PSD_SLACK, lam)
    }

    /// Searches for a strictly feasible point inside the box
    /// `|x_i|, |y_j| <= r` by maximizing the smallest eigenvalue.
    pub fn strictly_feasible(&self, r: f64) -> StrictFeasibility {
        assert!(r > 0.0, "box radius must be positive");
        let n_free = self.nx() + self.ny();
        let (sol, _, _) = self.max_eigmin_boxed(&[], r);
        match sol.status {
            Status::Optimal => {
                let t = -sol.objective;
                if t > STRICT_FEAS_MIN {
                    StrictFeasibility::Strict {
                        point: sol.free[..n_free].to_vec(),
                        margin: t,
                    }
                } else {
                    StrictFeasibility::NotStrict
                }
            }
            _ => StrictFeasibility::Inaccurate(sol.warnings.join("; ")),
        }
    }

    /// Solves the eigenvalue maximization with the smallest
    /// non-binding box, escalating toward `r_max`: enormous boxes
    /// wreck the scaling of the program, and the box only exists to
    /// keep the existential search bounded. Returns the solution, the
    /// box used, and whether the witness still touches it at the cap.
    fn max_eigmin_boxed(&self, x_fixed: &[f64], r_max: f64) -> (sdp::SDPSolution, f64, bool) {
        let n_vars = self.nx() + self.ny() - x_fixed.len();
        let mut r = 10.0_f64.min(r_max);
        loop {
            let sol = self.max_eigmin_sdp(x_fixed, r);
            if sol.status != Status::Optimal {
                return (sol, r, false);
            }
            let binding = sol.free[..n_vars].iter().any(|v| v.abs() >= 0.9 * r);
            if !binding {
                return (sol, r, false);
            }
            if r >= r_max {
                return (sol, r, true);
            }
            r = (r * 10.0).min(r_max);
        }
    }

    /// Maximizes `t` with `A(x_fixed, y) - t I >= 0` over the free tail
    /// variables inside the box. With `x_fixed` empty every variable is
    /// free. Returns the raw solution; objective is `-t`.
    fn max_eigmin_sdp(&self, x_fixed: &[f64], r: f64) -> sdp::SDPSolution {
        let k = self.k;
        let fixed = x_fixed.len();
        let n_free_vars = self.nx() + self.ny() - fixed;
        // blocks: main k x k, then two 1x1 box blocks per free variable
        let mut dims = vec![k];
        dims.extend(std::iter::repeat(1).take(2 * n_free_vars));
        let ns: usize = dims.iter().map(|&d| svec_len(d)).sum();
        let width = ns + n_free_vars + 1; // frees then t

        // base matrix: A + sum of fixed-x contributions
        let mut base = self.a.clone();
        for (v, mat) in x_fixed.iter().zip(&self.b) {
            base = base.add(&mat.scale(*v));
        }
        let free_mats: Vec<&SymMatrix> = self
            .b
            .iter()
            .skip(fixed)
            .chain(self.c.iter())
            .collect();

        let mut constraints = Vec::new();
        // main block: S - sum_v y_v M_v + t I = base
        let base_sv = svec(&base);
        let id_sv = svec(&SymMatrix::identity(k));
        let free_sv: Vec<Vec<f64>> = free_mats.iter().map(|m| svec(m)).collect();
        for t_idx in 0..svec_len(k) {
            let mut coeffs = vec![0.0; width];
            coeffs[t_idx] = 1.0;
            for (v, fsv) in free_sv.iter().enumerate() {
                coeffs[ns + v] = -fsv[t_idx];
            }
            coeffs[width - 1] = id_sv[t_idx];
            constraints.push(Constraint {
                coeffs,
                rhs: base_sv[t_idx],
            });
        }
        // box blocks: r - v >= 0 and r + v >= 0
        for v in 0..n_free_vars {
            for (slot, sign) in [(0usize, 1.0), (1usize, -1.0)] {
                let mut coeffs = vec![0.0; width];
                coeffs[svec_len(k) + 2 * v + slot] = 1.0;
                coeffs[ns + v] = sign;
                constraints.push(Constraint { coeffs, rhs: r });
            }
        }
        let mut objective = vec![0.0; width];
        objective[width - 1] = -1.0; // maximize t
        let prob = SDPProblem {
            block_dims: dims,
            n_free: n_free_vars + 1,
            objective,
            constraints,
            sense: Sense::Minimize,
        };
        sdp::solve(&prob, SOLVER_TOL)
    }

    /// Membership of `x` in the projection `S = {x : exists y,
    /// A(x, y) >= 0}`, decided by maximizing the smallest eigenvalue
    /// over `y` inside a box of half-width `box_r`.
    pub fn projection_member(&self, x: &[f64], tol: f64, box_r: f64) -> Result<Verdict, RelaxError> {
        if x.len() != self.nx() {
            return Err(RelaxError::Input(format!(
                "point has {} coordinates, pencil has {} x-variables",
                x.len(),
                self.nx()
            )));
        }
        let (sol, box_used, binding) = self.max_eigmin_boxed(x, box_r);
        if sol.status != Status::Optimal {
            return Ok(Verdict::inaccurate(format!(
                "projection program did not solve cleanly: {:?} ({})",
                sol.status,
                sol.warnings.join("; ")
            )));
        }
        let t = -sol.objective;
        let mut notes = Vec::new();
        if binding {
            notes.push(format!(
                "existential witness touches the search box (|y| near {box_used}); \
                 verdict may be clipped"
            ));
        }
        if t >= -tol {
            Ok(Verdict {
                kind: VerdictKind::In,
                margin: t,
                separator: None,
                low_confidence: t < tol,
                certificate: None,
                notes,
            })
        } else {
            // the dual multipliers on the main block rows form a polar
            // witness: U PSD, U . C_j ~ 0, applied to A'(X)
            let verdict = self.separator_from_dual(&sol, x, t, notes);
            Ok(verdict)
        }
    }

    /// Builds an `Out` verdict with a polar separator from the dual of
    /// the eigenvalue-maximization program.
    fn separator_from_dual(
        &self,
        sol: &sdp::SDPSolution,
        x: &[f64],
        t: f64,
        mut notes: Vec<String>,
    ) -> Verdict {
        let k = self.k;
        // dual multipliers of the svec-tying rows assemble into the
        // multiplier matrix (up to sign, fixed by trace normalization)
        let u = match sdp::smat(&sol.dual[..svec_len(k)], k) {
            Ok(m) => m,
            Err(_) => return Verdict::inaccurate("could not reassemble dual matrix"),
        };
        // normalize to unit trace; flip if the solver's convention
        // produced the negative multiplier
        let tr = u.trace();
        if tr.abs() < 1e-12 {
            notes.push("dual multiplier matrix has negligible trace".into());
            return Verdict::inaccurate("no usable separating functional");
        }
        let u = u.scale(1.0 / tr);
        let (lam_u, _) = eigmin(&u);
        if lam_u < -1e-6 {
            notes.push(format!("dual matrix not PSD (eigmin {lam_u:.2e})"));
            return Verdict::inaccurate("separating functional failed PSD check");
        }
        let vars: Vec<String> = (0..self.nx()).map(|i| format!("X{}", i + 1)).collect();
        let mut sep = Polynomial::zero(vars.clone(), CoeffMode::Float);
        sep.add_term(
            Monomial::constant(self.nx()),
            Scalar::Float(u.dot(&self.a)),
        );
        for (i, b_i) in self.b.iter().enumerate() {
            sep.add_term(
                Monomial::variable(self.nx(), i),
                Scalar::Float(u.dot(b_i)),
            );
        }
        let (sep_unit, scale) = crate::relax::rescale_unit_sup(&sep);
        let value = sep_unit.evaluate_f64(x);
        if value >= 0.0 {
            notes.push("dual separator does not separate; reporting margin only".into());
            return Verdict {
                kind: VerdictKind::Out,
                margin: -t,
                separator: None,
                low_confidence: true,
                certificate: None,
                notes,
            };
        }
        Verdict {
            kind: VerdictKind::Out,
            margin: -value,
            separator: Some(sep_unit),
            low_confidence: false,
            certificate: Some(CertificatePayload::Polar {
                u: u.scale(1.0 / scale),
                slack: 0.0,
            }),
            notes,
        }
    }

    /// Membership of an affine-linear polynomial in the polar cone of
    /// the projection: feasibility of `U >= 0`, `U . A <= l_0`,
    /// `U . B_i = l_i`, `U . C_j = 0`. Exact for strictly feasible
    /// pencils.
    pub fn polar_member(&self, ell: &Polynomial) -> Result<PolarOutcome, RelaxError> {
        if ell.arity() != self.nx() {
            return Err(RelaxError::Input(format!(
                "polynomial has {} variables, pencil has {} x-variables",
                ell.arity(),
                self.nx()
            )));
        }
        if ell.degree() > 1 {
            return Err(RelaxError::Input(
                "polar membership takes an affine-linear polynomial".into(),
            ));
        }
        match self.strictly_feasible(DEFAULT_BOX) {
            StrictFeasibility::Strict { .. } => {}
            StrictFeasibility::NotStrict => {
                return Ok(PolarOutcome::NotApplicable(
                    "pencil is not strictly feasible; polar description needs an interior point"
                        .into(),
                ))
            }
            StrictFeasibility::Inaccurate(w) => return Ok(PolarOutcome::Inaccurate(w)),
        }
        let k = self.k;
        let nx = self.nx();
        let ef = ell.to_float();
        let l0 = ef.coeff(&Monomial::constant(nx)).to_f64();
        let li: Vec<f64> = (0..nx)
            .map(|i| ef.coeff(&Monomial::variable(nx, i)).to_f64())
            .collect();

        // blocks: U (k x k) and the slack 1x1 for U . A + s = l_0
        let dims = vec![k, 1];
        let ns = svec_len(k) + 1;
        let mut constraints = Vec::new();
        let mut row_a = vec![0.0; ns];
        row_a[..svec_len(k)].copy_from_slice(&svec(&self.a));
        row_a[svec_len(k)] = 1.0;
        constraints.push(Constraint {
            coeffs: row_a,
            rhs: l0,
        });
        for (i, b_i) in self.b.iter().enumerate() {
            let mut coeffs = vec![0.0; ns];
            coeffs[..svec_len(k)].copy_from_slice(&svec(b_i));
            constraints.push(Constraint {
                coeffs,
                rhs: li[i],
            });
        }
        for c_j in &self.c {
            let mut coeffs = vec![0.0; ns];
            coeffs[..svec_len(k)].copy_from_slice(&svec(c_j));
            constraints.push(Constraint { coeffs, rhs: 0.0 });
        }
        let prob = SDPProblem {
            block_dims: dims,
            n_free: 0,
            objective: vec![],
            constraints,
            sense: Sense::Feasibility,
        };
        let sol = sdp::solve(&prob, SOLVER_TOL);
        Ok(match sol.status {
            Status::Optimal => PolarOutcome::Feasible(PolarCertificate {
                slack: sol.blocks[1].entry(0, 0),
                u: sol.blocks.into_iter().next().expect("U block"),
            }),
            Status::Infeasible => {
                PolarOutcome::Infeasible(sol.infeasibility.expect("certificate attached"))
            }
            _ => PolarOutcome::Inaccurate(sol.warnings.join("; ")),
        })
    }

    /// Membership of `x` in the closure of the projection, via the
    /// double polar: minimize `U . A'(x)` over the compact base
    /// `{U >= 0, U . C_j = 0, Tr U = 1}`; `x` is in the closure iff
    /// the optimum is (within tolerance) nonnegative.
    pub fn closure_member(&self, x: &[f64]) -> Result<Verdict, RelaxError> {
        if x.len() != self.nx() {
            return Err(RelaxError::Input(format!(
                "point has {} coordinates, pencil has {} x-variables",
                x.len(),
                self.nx()
            )));
        }
        match self.strictly_feasible(DEFAULT_BOX) {
            StrictFeasibility::Strict { .. } => {}
            StrictFeasibility::NotStrict => {
                return Ok(Verdict::not_applicable(
                    "pencil is not strictly feasible; closure test needs an interior point",
                ))
            }
            StrictFeasibility::Inaccurate(w) => return Ok(Verdict::inaccurate(w)),
        }
        let k = self.k;
        let ax = self.evaluate_x(x);
        let dims = vec![k];
        let ns = svec_len(k);
        let mut constraints = Vec::new();
        for c_j in &self.c {
            constraints.push(Constraint {
                coeffs: svec(c_j),
                rhs: 0.0,
            });
        }
        constraints.push(Constraint {
            coeffs: svec(&SymMatrix::identity(k)),
            rhs: 1.0,
        });
        let objective = svec(&ax);
        let prob = SDPProblem {
            block_dims: dims,
            n_free: 0,
            objective: objective[..ns].to_vec(),
            constraints,
            sense: Sense::Minimize,
        };
        let sol = sdp::solve(&prob, SOLVER_TOL);
        if sol.status != Status::Optimal {
            return Ok(Verdict::inaccurate(format!(
                "closure program did not solve cleanly: {:?} ({})",
                sol.status,
                sol.warnings.join("; ")
            )));
        }
        let opt = sol.objective;
        if opt >= -MEMBER_TOL {
            Ok(Verdict {
                kind: VerdictKind::In,
                margin: opt,
                separator: None,
                low_confidence: opt < MEMBER_TOL,
                certificate: None,
                notes: Vec::new(),
            })
        } else {
            // the optimal U gives the separating affine functional
            let u = sol.blocks.into_iter().next().expect("U block");
            let vars: Vec<String> = (0..self.nx()).map(|i| format!("X{}", i + 1)).collect();
            let mut sep = Polynomial::zero(vars, CoeffMode::Float);
            sep.add_term(
                Monomial::constant(self.nx()),
                Scalar::Float(u.dot(&self.a)),
            );
            for (i, b_i) in self.b.iter().enumerate() {
                sep.add_term(
                    Monomial::variable(self.nx(), i),
                    Scalar::Float(u.dot(b_i)),
                );
            }
            let (sep_unit, scale) = crate::relax::rescale_unit_sup(&sep);
            let margin = -sep_unit.evaluate_f64(x);
            Ok(Verdict {
                kind: VerdictKind::Out,
                margin,
                separator: Some(sep_unit),
                low_confidence: false,
                certificate: Some(CertificatePayload::Polar {
                    u: u.scale(1.0 / scale),
                    slack: 0.0,
                }),
                notes: Vec::new(),
            })
        }
    }

    /// Membership of `p` (a polynomial in the X variables) in the
    /// pencil's matrix quadratic-module cone at degree `d`:
    /// coefficient-matching `p = A'(X) . M(X) + sigma(X)` with
    /// `M(X) = v_d(X)^T G v_d(X)` blockwise from one big PSD Gram,
    /// `C_j . M(X) = 0` identically, and `sigma` SOS of degree `2d`.
    pub fn qm_member(&self, d: u32, p: &Polynomial) -> Result<PencilQmOutcome, RelaxError> {
        let nx = self.nx();
        if p.arity() != nx {
            return Err(RelaxError::Input(format!(
                "polynomial has {} variables, pencil has {nx} x-variables",
                p.arity()
            )));
        }
        if p.degree() > (2 * d + 1) as i64 {
            return Err(RelaxError::Input(format!(
                "polynomial degree {} exceeds 2d+1 = {}",
                p.degree(),
                2 * d + 1
            )));
        }
        match self.strictly_feasible(DEFAULT_BOX) {
            StrictFeasibility::Strict { .. } => {}
            StrictFeasibility::NotStrict => {
                return Ok(PencilQmOutcome::Inaccurate(
                    "pencil is not strictly feasible".into(),
                ))
            }
            StrictFeasibility::Inaccurate(w) => return Ok(PencilQmOutcome::Inaccurate(w)),
        }

        let k = self.k;
        let basis = monomial_basis(nx, d);
        let bn = basis.len();
        let big = k * bn;
        let rows = monomial_basis(nx, 2 * d + 1);
        let row_index: std::collections::BTreeMap<&Monomial, usize> =
            rows.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let rows_m = monomial_basis(nx, 2 * d);

        let sq2 = std::f64::consts::SQRT_2;
        let sv_big = svec_len(big);
        let sv_sos = svec_len(bn);
        let width = sv_big + sv_sos;

        // match rows: p = A'(X) . M(X) + sigma(X) per monomial;
        // identity rows: C_j . M(X) = 0 per monomial of degree <= 2d.
        // With I = (a, alpha) <= J = (b, beta) and svec value
        // v = sqrt(2) G_IJ off-diagonal (v = G_II diagonal), the Gram
        // entry feeds both M_{ab} and M_{ba}, so the coefficient of v
        // on an "entry . x^{alpha+beta}" term is sqrt(2) (resp. 1).
        let row_index_m: std::collections::BTreeMap<&Monomial, usize> =
            rows_m.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let mut match_rows = vec![vec![0.0; width]; rows.len()];
        let mut ident_rows = vec![vec![vec![0.0; width]; rows_m.len()]; self.ny()];
        let mut t = 0;
        for i_idx in 0..big {
            let (a_row, alpha) = (i_idx / bn, i_idx % bn);
            for j_idx in i_idx..big {
                let (b_row, beta) = (j_idx / bn, j_idx % bn);
                let pair = basis[alpha].mul(&basis[beta]);
                let coord_weight = if i_idx == j_idx { 1.0 } else { sq2 };
                let a_entry = self.a.entry(a_row, b_row);
                if a_entry != 0.0 {
                    match_rows[row_index[&pair]][t] += coord_weight * a_entry;
                }
                for (v, b_mat) in self.b.iter().enumerate() {
                    let b_entry = b_mat.entry(a_row, b_row);
                    if b_entry != 0.0 {
                        let m = pair.mul(&Monomial::variable(nx, v));
                        match_rows[row_index[&m]][t] += coord_weight * b_entry;
                    }
                }
                for (j, c_mat) in self.c.iter().enumerate() {
                    let c_entry = c_mat.entry(a_row, b_row);
                    if c_entry != 0.0 {
                        ident_rows[j][row_index_m[&pair]][t] += coord_weight * c_entry;
                    }
                }
                t += 1;
            }
        }
        // sigma part
        let mut t = 0;
        for alpha in 0..bn {
            for beta in alpha..bn {
                let pair = basis[alpha].mul(&basis[beta]);
                let w = if alpha == beta { 1.0 } else { sq2 };
                match_rows[row_index[&pair]][sv_big + t] += w;
                t += 1;
            }
        }

        let pf = p.to_float();
        let mut constraints = Vec::new();
        for (i, m) in rows.iter().enumerate() {
            constraints.push(Constraint {
                coeffs: match_rows[i].clone(),
                rhs: pf.coeff(m).to_f64(),
            });
        }
        for per_gen in &ident_rows {
            for row in per_gen {
                constraints.push(Constraint {
                    coeffs: row.clone(),
                    rhs: 0.0,
                });
            }
        }
        let prob = SDPProblem {
            block_dims: vec![big, bn],
            n_free: 0,
            objective: vec![],
            constraints,
            sense: Sense::Feasibility,
        };
        let sol = sdp::solve_feasibility(&prob, SOLVER_TOL, FEAS_TOL);
        Ok(match sol.status {
            Status::Optimal => {
                let big_gram = sol.blocks[0].clone();
                let sos_gram = sol.blocks[1].clone();
                let residual =
                    self.qm_residual(&basis, &big_gram, &sos_gram, &pf);
                PencilQmOutcome::Feasible(PencilQmCertificate {
                    degree: d,
                    basis,
                    big_gram,
                    sos_gram,
                    residual,
                })
            }
            Status::Infeasible => {
                PencilQmOutcome::Infeasible(sol.infeasibility.expect("certificate attached"))
            }
            _ => PencilQmOutcome::Inaccurate(sol.warnings.join("; ")),
        })
    }

    /// Expands `A'(X) . M(X) + sigma(X)` in floats and reports the
    /// sup-norm residual against the target.
    pub fn qm_residual(
        &self,
        basis: &[Monomial],
        big_gram: &SymMatrix,
        sos_gram: &SymMatrix,
        target: &Polynomial,
    ) -> f64 {
        let nx = self.nx();
        let bn = basis.len();
        let vars = target.vars().to_vec();
        let mut acc = Polynomial::zero(vars.clone(), CoeffMode::Float);
        let big = self.k * bn;
        for i_idx in 0..big {
            let (a_row, alpha) = (i_idx / bn, i_idx % bn);
            for j_idx in 0..big {
                let (b_row, beta) = (j_idx / bn, j_idx % bn);
                let g = big_gram.entry(i_idx, j_idx);
                if g == 0.0 {
                    continue;
                }
                let pair = basis[alpha].mul(&basis[beta]);
                let a_entry = self.a.entry(a_row, b_row);
                if a_entry != 0.0 {
                    acc.add_term(pair.clone(), Scalar::Float(g * a_entry));
                }
                for (v, b_mat) in self.b.iter().enumerate() {
                    let b_entry = b_mat.entry(a_row, b_row);
                    if b_entry != 0.0 {
                        acc.add_term(
                            pair.mul(&Monomial::variable(nx, v)),
                            Scalar::Float(g * b_entry),
                        );
                    }
                }
            }
        }
        for alpha in 0..bn {
            for beta in 0..bn {
                let g = sos_gram.entry(alpha, beta);
                if g != 0.0 {
                    acc.add_term(basis[alpha].mul(&basis[beta]), Scalar::Float(g));
                }
            }
        }
        acc.sub(&target.to_float())
            .map(|d| d.max_abs_coeff())
            .unwrap_or(f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_expr;

    /// Unit disk: [[1+X, Y], [Y, 1-X]].
    fn disk_pencil() -> MatrixPencil {
        let a = SymMatrix::identity(2);
        let bx = SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let by = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        MatrixPencil::new(a, vec![bx, by], vec![]).unwrap()
    }

    /// Union of two unit disks centered (-1, 0) and (1, 0), as the
    /// projection of a 4x4 spectrahedron over one extra variable.
    pub(crate) fn two_disk_pencil() -> MatrixPencil {
        let a = SymMatrix::identity(4);
        let bx = SymMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
        ])
        .unwrap();
        let by = SymMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
        ])
        .unwrap();
        let cz = SymMatrix::from_rows(&[
            vec![0.0, -1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, -1.0],
        ])
        .unwrap();
        MatrixPencil::new(a, vec![bx, by], vec![cz]).unwrap()
    }

    #[test]
    fn membership_eigenvalues() {
        let disk = disk_pencil();
        let (inside, lam) = disk.member(&[0.0, 0.0], &[]);
        assert!(inside && (lam - 1.0).abs() < 1e-12);
        let (inside, lam) = disk.member(&[1.0, 1.0], &[]);
        assert!(!inside);
        assert!((lam - (1.0 - 2f64.sqrt())).abs() < 1e-10);

        let two = two_disk_pencil();
        let (inside, lam) = two.member(&[2.0, 0.0], &[1.0]);
        assert!(inside, "boundary point of the right disk");
        assert!(lam.abs() < 1e-12);
    }

    #[test]
    fn strict_feasibility() {
        match disk_pencil().strictly_feasible(10.0) {
            StrictFeasibility::Strict { point, margin } => {
                assert!(point[0].abs() < 1e-3 && point[1].abs() < 1e-3, "{point:?}");
                assert!((margin - 1.0).abs() < 1e-4, "margin {margin}");
            }
            other => panic!("expected strict witness: {other:?}"),
        }
        match two_disk_pencil().strictly_feasible(10.0) {
            StrictFeasibility::Strict { margin, .. } => {
                assert!((margin - 1.0).abs() < 1e-4, "margin {margin}");
            }
            other => panic!("expected strict witness: {other:?}"),
        }
        // diag(x, -x) admits no interior point
        let a = SymMatrix::zeros(2);
        let bx = SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let degenerate = MatrixPencil::new(a, vec![bx], vec![]).unwrap();
        assert!(matches!(
            degenerate.strictly_feasible(10.0),
            StrictFeasibility::NotStrict
        ));
    }

    #[test]
    fn projection_membership() {
        let two = two_disk_pencil();
        let v = two.projection_member(&[1.5, 0.5], MEMBER_TOL, DEFAULT_BOX).unwrap();
        assert!(v.is_in(), "{v:?}");
        let v = two.projection_member(&[2.0, 0.0], MEMBER_TOL, DEFAULT_BOX).unwrap();
        assert!(v.is_in(), "boundary: {v:?}");
        let v = two.projection_member(&[2.05, 0.0], MEMBER_TOL, DEFAULT_BOX).unwrap();
        assert!(v.is_out(), "{v:?}");
    }

    #[test]
    fn polar_cone_examples() {
        let disk = disk_pencil();
        let vars: Vec<String> = vec!["X".into(), "Y".into()];
        let ell = parse_expr("1 + X", &vars, CoeffMode::Exact).unwrap();
        match disk.polar_member(&ell).unwrap() {
            PolarOutcome::Feasible(cert) => {
                assert!(cert.slack >= -1e-9);
                assert!(eigmin(&cert.u).0 >= -1e-8);
            }
            other => panic!("1 + X is nonnegative on the disk: {other:?}"),
        }
        let one = parse_expr("1", &vars, CoeffMode::Exact).unwrap();
        assert!(matches!(
            disk.polar_member(&one).unwrap(),
            PolarOutcome::Feasible(_)
        ));
        let bad = parse_expr("1 - 2X", &vars, CoeffMode::Exact).unwrap();
        assert!(matches!(
            disk.polar_member(&bad).unwrap(),
            PolarOutcome::Infeasible(_)
        ));
    }

    #[test]
    fn closure_membership() {
        let two = two_disk_pencil();
        assert!(two.closure_member(&[2.0, 0.0]).unwrap().is_in());
        let v = two.closure_member(&[2.05, 0.0]).unwrap();
        assert!(v.is_out(), "{v:?}");
        assert!(matches!(
            v.certificate,
            Some(CertificatePayload::Polar { .. })
        ));
        let disk = disk_pencil();
        assert!(disk.closure_member(&[0.5, 0.0]).unwrap().is_in());
    }

    #[test]
    fn pencil_qm_membership() {
        let two = two_disk_pencil();
        let vars: Vec<String> = vec!["X".into(), "Y".into()];
        for (src, expect) in [("3 + X", true), ("2 + X", true)] {
            let p = parse_expr(src, &vars, CoeffMode::Exact).unwrap();
            match two.qm_member(0, &p).unwrap() {
                PencilQmOutcome::Feasible(cert) => {
                    assert!(expect);
                    assert!(cert.residual <= 1e-6, "{src}: residual {}", cert.residual);
                }
                other => panic!("{src}: expected feasible={expect}, got {other:?}"),
            }
        }
        let neg = parse_expr("X + Y - 10", &vars, CoeffMode::Exact).unwrap();
        for d in 0..=2 {
            match two.qm_member(d, &neg).unwrap() {
                PencilQmOutcome::Infeasible(_) => {}
                other => panic!("X+Y-10 must be infeasible at degree {d}: {other:?}"),
            }
        }
    }
}
