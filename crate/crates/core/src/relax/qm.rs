//! Truncated quadratic-module queries.
//!
//! `QM(p)_d` is the set of `s_0 + s_1 p_1 + ... + s_r p_r` with every
//! `s_i` a sum of squares of polynomials of degree at most `d` (one
//! shared truncation degree). Its elements live in degree `2d + nu`.
//! Each operation below assembles the same coefficient-matching system
//! over the Gram matrices of the `s_i` and differs only in objective
//! and extra scalar variables.

use std::collections::BTreeMap;

use crate::poly::{monomial_basis, CoeffMode, Monomial, Point, Polynomial, Scalar};
use crate::sdp::{self, Constraint, SDPProblem, Sense, Status, SymMatrix};
use crate::tolerances::{FEAS_TOL, MEMBER_TOL, SOLVER_TOL};

use super::{
    rescale_unit_sup, CertificatePayload, MembershipOutcome, QMCertificate, RelaxError,
    SemialgebraicSet, SupportOutcome, Verdict, VerdictKind,
};

/// Coefficient-matching skeleton shared by every QM query.
pub(crate) struct QmSystem {
    pub basis: Vec<Monomial>,
    pub multipliers: Vec<Polynomial>,
    pub block_dims: Vec<usize>,
    pub rows: Vec<Monomial>,
    /// rows x total_svec coefficient matrix.
    pub matrix: Vec<Vec<f64>>,
    pub total_svec: usize,
}

impl QmSystem {
    pub fn build(set: &SemialgebraicSet, d: u32) -> Self {
        let n = set.arity();
        let nu = set.max_degree();
        let basis = monomial_basis(n, d);
        let one = Polynomial::constant(set.vars().to_vec(), Scalar::Float(1.0));
        let mut multipliers = vec![one];
        multipliers.extend(set.inequalities().iter().map(|p| p.to_float()));

        let max_deg = 2 * d + nu;
        let rows = monomial_basis(n, max_deg);
        let row_index: BTreeMap<Monomial, usize> = rows
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, m)| (m, i))
            .collect();

        let bn = basis.len();
        let svec_per_block = sdp::svec_len(bn);
        let total_svec = svec_per_block * multipliers.len();
        let mut matrix = vec![vec![0.0; total_svec]; rows.len()];

        let sq2 = std::f64::consts::SQRT_2;
        for (g, mult) in multipliers.iter().enumerate() {
            let block_off = g * svec_per_block;
            let mut t = 0;
            for a in 0..bn {
                for b in a..bn {
                    let pair = basis[a].mul(&basis[b]);
                    let w = if a == b { 1.0 } else { sq2 };
                    for (gamma, c) in mult.terms() {
                        let m = pair.mul(gamma);
                        let row = row_index[&m];
                        matrix[row][block_off + t] += w * c.to_f64();
                    }
                    t += 1;
                }
            }
        }

        QmSystem {
            block_dims: vec![bn; multipliers.len()],
            basis,
            multipliers,
            rows,
            matrix,
            total_svec,
        }
    }

    /// Expands Gram blocks back into the polynomial they represent.
    pub fn expand(&self, grams: &[SymMatrix], vars: &[String]) -> Polynomial {
        let mut acc = Polynomial::zero(vars.to_vec(), CoeffMode::Float);
        let bn = self.basis.len();
        for (g, mult) in self.multipliers.iter().enumerate() {
            for a in 0..bn {
                for b in a..bn {
                    let w = if a == b { 1.0 } else { 2.0 };
                    let entry = grams[g].entry(a, b);
                    if entry == 0.0 {
                        continue;
                    }
                    let pair = self.basis[a].mul(&self.basis[b]);
                    for (gamma, c) in mult.terms() {
                        acc.add_term(pair.mul(gamma), Scalar::Float(w * entry * c.to_f64()));
                    }
                }
            }
        }
        acc
    }

    fn residual_against(&self, grams: &[SymMatrix], target: &Polynomial) -> f64 {
        let replay = self.expand(grams, target.vars());
        replay
            .sub(&target.to_float())
            .map(|diff| diff.max_abs_coeff())
            .unwrap_or(f64::INFINITY)
    }
}

fn check_target_degree(
    set: &SemialgebraicSet,
    d: u32,
    f: &Polynomial,
    what: &str,
) -> Result<(), RelaxError> {
    if f.vars() != set.vars() {
        return Err(RelaxError::Input(format!(
            "{what} must use the set's variables {:?}",
            set.vars()
        )));
    }
    let cap = (2 * d + set.max_degree()) as i64;
    if f.degree() > cap {
        return Err(RelaxError::Input(format!(
            "{what} has degree {} but QM(p)_{d} only reaches degree {cap}",
            f.degree()
        )));
    }
    Ok(())
}

/// Membership of `f` in `QM(p)_d`, decided by a feasibility SDP over
/// one Gram per multiplier.
pub fn qm_member(
    set: &SemialgebraicSet,
    d: u32,
    f: &Polynomial,
) -> Result<MembershipOutcome<QMCertificate>, RelaxError> {
    let sys = QmSystem::build(set, d);
    check_target_degree(set, d, f, "target polynomial")?;
    let ff = f.to_float();

    let constraints: Vec<Constraint> = sys
        .rows
        .iter()
        .enumerate()
        .map(|(i, m)| Constraint {
            coeffs: sys.matrix[i].clone(),
            rhs: ff.coeff(m).to_f64(),
        })
        .collect();
    let prob = SDPProblem {
        block_dims: sys.block_dims.clone(),
        n_free: 0,
        objective: vec![],
        constraints,
        sense: Sense::Feasibility,
    };
    let sol = sdp::solve(&prob, SOLVER_TOL);
    Ok(match sol.status {
        Status::Optimal => {
            let residual = sys.residual_against(&sol.blocks, f);
            MembershipOutcome::Feasible(QMCertificate {
                degree: d,
                basis: sys.basis.clone(),
                grams: sol.blocks,
                residual,
            })
        }
        Status::Infeasible => {
            MembershipOutcome::Infeasible(sol.infeasibility.expect("certificate attached"))
        }
        _ => MembershipOutcome::Inaccurate(sol.warnings.join("; ")),
    })
}

/// Support value of the degree-d Lasserre relaxation in direction `u`:
/// the least `t` with `t - <u, X>` in `QM(p)_d`.
pub fn lasserre_support(
    set: &SemialgebraicSet,
    d: u32,
    u: &[f64],
) -> Result<SupportOutcome, RelaxError> {
    if u.len() != set.arity() {
        return Err(RelaxError::Input(format!(
            "direction has {} coordinates, expected {}",
            u.len(),
            set.arity()
        )));
    }
    if u.iter().map(|v| v * v).sum::<f64>() <= 0.0 {
        return Err(RelaxError::Input("direction must be nonzero".into()));
    }
    let mut target = Polynomial::zero(set.vars().to_vec(), CoeffMode::Float);
    for (k, &uk) in u.iter().enumerate() {
        target.add_term(
            Monomial::variable(set.arity(), k),
            Scalar::Float(uk),
        );
    }
    support_of_target(set, d, &target)
}

/// Support value of the relaxed hull of the image of `S` under the
/// polynomial map `f = (f_1, ..., f_m)`, in image direction `u`: the
/// least `t` with `t - sum_i u_i f_i` in `QM(p)_d`.
pub fn pushforward_support(
    set: &SemialgebraicSet,
    d: u32,
    map: &[Polynomial],
    u: &[f64],
) -> Result<SupportOutcome, RelaxError> {
    if map.is_empty() || map.len() != u.len() {
        return Err(RelaxError::Input(
            "map components and direction must match and be nonempty".into(),
        ));
    }
    if u.iter().map(|v| v * v).sum::<f64>() <= 0.0 {
        return Err(RelaxError::Input("direction must be nonzero".into()));
    }
    let mut target = Polynomial::zero(set.vars().to_vec(), CoeffMode::Float);
    for (fi, &ui) in map.iter().zip(u) {
        let scaled = fi.to_float().scale(&Scalar::Float(ui))?;
        target = target.add(&scaled)?;
    }
    support_of_target(set, d, &target)
}

fn support_of_target(
    set: &SemialgebraicSet,
    d: u32,
    target: &Polynomial,
) -> Result<SupportOutcome, RelaxError> {
    let sys = QmSystem::build(set, d);
    check_target_degree(set, d, target, "support target")?;
    let tf = target.to_float();
    let one = Monomial::constant(set.arity());

    // rows: sigma-sum(m) - t*[m = 1] = -target_m
    let width = sys.total_svec + 1;
    let mut constraints = Vec::with_capacity(sys.rows.len());
    for (i, m) in sys.rows.iter().enumerate() {
        let mut coeffs = Vec::with_capacity(width);
        coeffs.extend_from_slice(&sys.matrix[i]);
        coeffs.push(if *m == one { -1.0 } else { 0.0 });
        constraints.push(Constraint {
            coeffs,
            rhs: -tf.coeff(m).to_f64(),
        });
    }
    let mut objective = vec![0.0; width];
    objective[width - 1] = 1.0;
    let prob = SDPProblem {
        block_dims: sys.block_dims.clone(),
        n_free: 1,
        objective,
        constraints,
        sense: Sense::Minimize,
    };
    let sol = sdp::solve(&prob, SOLVER_TOL);
    Ok(match sol.status {
        Status::Infeasible => SupportOutcome::Unbounded,
        Status::Unbounded => {
            SupportOutcome::Inaccurate("support objective unbounded below (degenerate cone)".into())
        }
        _ => match super::usable_optimum(&sol, 1e-6) {
            Some(_) => SupportOutcome::Value(*sol.free.last().expect("t variable")),
            None => SupportOutcome::Inaccurate(sol.warnings.join("; ")),
        },
    })
}

/// Point membership in the Lasserre relaxation: minimizes `l(x)` over
/// linear `l` in `QM(p)_d` on the compact base where the Gram traces
/// sum to one. `x` is in the relaxation iff the optimum is (within
/// tolerance) nonnegative.
pub fn lasserre_point_member(
    set: &SemialgebraicSet,
    d: u32,
    x: &Point,
) -> Result<Verdict, RelaxError> {
    if x.arity() != set.arity() {
        return Err(RelaxError::Input(format!(
            "point has {} coordinates, expected {}",
            x.arity(),
            set.arity()
        )));
    }
    let sys = QmSystem::build(set, d);
    let xs = x.to_f64s();
    let lin_basis = monomial_basis(set.arity(), 1);
    let n_lin = lin_basis.len();
    let width = sys.total_svec + n_lin;

    // rows: sigma-sum(m) - c_m [deg m <= 1] = 0, plus trace normalization
    let mut constraints = Vec::with_capacity(sys.rows.len() + 1);
    for (i, m) in sys.rows.iter().enumerate() {
        let mut coeffs = Vec::with_capacity(width);
        coeffs.extend_from_slice(&sys.matrix[i]);
        let mut tail = vec![0.0; n_lin];
        if let Some(pos) = lin_basis.iter().position(|b| b == m) {
            tail[pos] = -1.0;
        }
        coeffs.extend_from_slice(&tail);
        constraints.push(Constraint { coeffs, rhs: 0.0 });
    }
    constraints.push(trace_normalization_row(&sys.block_dims, width));

    let mut objective = vec![0.0; width];
    for (pos, m) in lin_basis.iter().enumerate() {
        objective[sys.total_svec + pos] = m
            .0
            .iter()
            .zip(&xs)
            .map(|(&e, &v)| v.powi(e as i32))
            .product();
    }
    let prob = SDPProblem {
        block_dims: sys.block_dims.clone(),
        n_free: n_lin,
        objective,
        constraints,
        sense: Sense::Minimize,
    };
    let sol = sdp::solve(&prob, SOLVER_TOL);
    let Some(uncertainty) = super::usable_optimum(&sol, 1e-6) else {
        return Ok(Verdict::inaccurate(format!(
            "separation program did not solve cleanly: {:?} ({})",
            sol.status,
            sol.warnings.join("; ")
        )));
    };
    let band = MEMBER_TOL.max(uncertainty);
    let optimum = sol.objective;
    if optimum < -band {
        // read off the separator and rescale it with its certificate
        let mut sep = Polynomial::zero(set.vars().to_vec(), CoeffMode::Float);
        for (pos, m) in lin_basis.iter().enumerate() {
            sep.add_term(m.clone(), Scalar::Float(sol.free[pos]));
        }
        let (sep_unit, scale) = rescale_unit_sup(&sep);
        let grams: Vec<SymMatrix> = sol.blocks.iter().map(|g| g.scale(1.0 / scale)).collect();
        let residual = sys.residual_against(&grams, &sep_unit);
        let margin = -sep_unit.evaluate_f64(&xs);
        Ok(Verdict {
            kind: VerdictKind::Out,
            margin,
            separator: Some(sep_unit),
            low_confidence: false,
            certificate: Some(CertificatePayload::QuadraticModule(QMCertificate {
                degree: d,
                basis: sys.basis.clone(),
                grams,
                residual,
            })),
            notes: Vec::new(),
        })
    } else {
        Ok(Verdict {
            kind: VerdictKind::In,
            margin: optimum,
            separator: None,
            low_confidence: optimum < band,
            certificate: None,
            notes: if optimum < band {
                vec!["normalized optimum inside the boundary tolerance".into()]
            } else {
                Vec::new()
            },
        })
    }
}

pub(crate) fn trace_normalization_row(block_dims: &[usize], width: usize) -> Constraint {
    let mut coeffs = vec![0.0; width];
    let mut off = 0;
    for &k in block_dims {
        let mut idx = off;
        for i in 0..k {
            coeffs[idx] = 1.0;
            idx += k - i;
        }
        off += sdp::svec_len(k);
    }
    Constraint { coeffs, rhs: 1.0 }
}

/// Replays a membership certificate against a target in float
/// arithmetic; used by verdict soundness checks.
pub fn qm_certificate_residual(
    set: &SemialgebraicSet,
    cert: &QMCertificate,
    target: &Polynomial,
) -> f64 {
    let sys = QmSystem::build(set, cert.degree);
    sys.residual_against(&cert.grams, target)
}

/// Convenience check used in tests and the verdict soundness property:
/// feasibility of the certificate system for `f` at degree `d` with
/// the default tolerances.
pub fn qm_member_is_feasible(set: &SemialgebraicSet, d: u32, f: &Polynomial) -> bool {
    matches!(
        qm_member(set, d, f),
        Ok(MembershipOutcome::Feasible(ref c)) if c.residual <= FEAS_TOL.max(1e-6)
    )
}
