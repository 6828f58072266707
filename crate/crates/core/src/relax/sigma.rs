//! Sums of squares modulo a truncated ideal span, and theta-body
//! queries built on them.
//!
//! Ideal membership `f - sigma in I` is implemented as membership in
//! the span of `{X^beta g_j : deg(X^beta g_j) <= 2d}` — a
//! generator-truncated subspace, not true ideal membership. That
//! convention is deliberate and is exercised against known
//! certificates in the tests.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;

use crate::poly::{monomial_basis, CoeffMode, Monomial, Point, Polynomial, Scalar};
use crate::sdp::{self, Constraint, SDPProblem, Sense, Status};
use crate::tolerances::{MEMBER_TOL, SOLVER_TOL};

use super::qm::trace_normalization_row;
use super::{
    rescale_unit_sup, CertificatePayload, IdealSpec, MembershipOutcome, RelaxError,
    SigmaCertificate, SupportOutcome, Verdict, VerdictKind,
};

pub(crate) struct SigmaSystem {
    pub basis: Vec<Monomial>,
    pub rows: Vec<Monomial>,
    /// rows x svec(gram) coefficients.
    pub gram_cols: Vec<Vec<f64>>,
    /// coefficient variables: (generator index, monomial multiplier)
    pub h_vars: Vec<(usize, Monomial)>,
    /// rows x h coefficients.
    pub h_cols: Vec<Vec<f64>>,
    pub svec_len: usize,
}

impl SigmaSystem {
    pub fn build(ideal: &IdealSpec, d: u32) -> Self {
        let n = ideal.arity();
        let basis = monomial_basis(n, d);
        let rows = monomial_basis(n, 2 * d);
        let row_index: BTreeMap<Monomial, usize> = rows
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, m)| (m, i))
            .collect();
        let bn = basis.len();
        let svl = sdp::svec_len(bn);
        let mut gram_cols = vec![vec![0.0; svl]; rows.len()];
        let sq2 = std::f64::consts::SQRT_2;
        let mut t = 0;
        for a in 0..bn {
            for b in a..bn {
                let m = basis[a].mul(&basis[b]);
                let w = if a == b { 1.0 } else { sq2 };
                gram_cols[row_index[&m]][t] += w;
                t += 1;
            }
        }

        let mut h_vars = Vec::new();
        for (j, g) in ideal.generators().iter().enumerate() {
            let deg_g = g.degree().max(0) as u32;
            if deg_g > 2 * d {
                continue; // generator unusable at this truncation
            }
            for beta in monomial_basis(n, 2 * d - deg_g) {
                h_vars.push((j, beta));
            }
        }
        let mut h_cols = vec![vec![0.0; h_vars.len()]; rows.len()];
        for (col, (j, beta)) in h_vars.iter().enumerate() {
            for (gamma, c) in ideal.generators()[*j].terms() {
                let m = beta.mul(gamma);
                h_cols[row_index[&m]][col] += c.to_f64();
            }
        }

        SigmaSystem {
            basis,
            rows,
            gram_cols,
            h_vars,
            h_cols,
            svec_len: svl,
        }
    }

    /// h_j polynomials from the free-variable values.
    pub fn ideal_coeffs(&self, ideal: &IdealSpec, h_values: &[f64]) -> Vec<Polynomial> {
        let mut out: Vec<Polynomial> = ideal
            .generators()
            .iter()
            .map(|_| Polynomial::zero(ideal.vars().to_vec(), CoeffMode::Float))
            .collect();
        for ((j, beta), &v) in self.h_vars.iter().zip(h_values) {
            out[*j].add_term(beta.clone(), Scalar::Float(v));
        }
        out
    }

    pub fn expand(
        &self,
        ideal: &IdealSpec,
        gram: &sdp::SymMatrix,
        h: &[Polynomial],
    ) -> Polynomial {
        let mut acc = Polynomial::zero(ideal.vars().to_vec(), CoeffMode::Float);
        let bn = self.basis.len();
        for a in 0..bn {
            for b in a..bn {
                let w = if a == b { 1.0 } else { 2.0 };
                let entry = gram.entry(a, b);
                if entry != 0.0 {
                    acc.add_term(
                        self.basis[a].mul(&self.basis[b]),
                        Scalar::Float(w * entry),
                    );
                }
            }
        }
        for (hj, gj) in h.iter().zip(ideal.generators()) {
            let prod = hj.mul(&gj.to_float()).expect("float context");
            acc = acc.add(&prod).expect("float context");
        }
        acc
    }

    fn residual_against(
        &self,
        ideal: &IdealSpec,
        gram: &sdp::SymMatrix,
        h: &[Polynomial],
        target: &Polynomial,
    ) -> f64 {
        self.expand(ideal, gram, h)
            .sub(&target.to_float())
            .map(|d| d.max_abs_coeff())
            .unwrap_or(f64::INFINITY)
    }
}

fn check_degree(ideal: &IdealSpec, d: u32, f: &Polynomial, what: &str) -> Result<(), RelaxError> {
    if f.vars() != ideal.vars() {
        return Err(RelaxError::Input(format!(
            "{what} must use the ideal's variables {:?}",
            ideal.vars()
        )));
    }
    if f.degree() > (2 * d) as i64 {
        return Err(RelaxError::Input(format!(
            "{what} has degree {} but Sigma(d={d}, I) reaches degree {}",
            f.degree(),
            2 * d
        )));
    }
    Ok(())
}

/// Membership of `f` in `Sigma(d, I)`: `f = sigma + sum_j h_j g_j`
/// with `sigma` SOS of degree `<= 2d` and `deg(h_j g_j) <= 2d`.
pub fn sigma_member(
    ideal: &IdealSpec,
    d: u32,
    f: &Polynomial,
) -> Result<MembershipOutcome<SigmaCertificate>, RelaxError> {
    let sys = SigmaSystem::build(ideal, d);
    check_degree(ideal, d, f, "target polynomial")?;
    let ff = f.to_float();

    let width = sys.svec_len + sys.h_vars.len();
    let constraints: Vec<Constraint> = sys
        .rows
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut coeffs = Vec::with_capacity(width);
            coeffs.extend_from_slice(&sys.gram_cols[i]);
            coeffs.extend_from_slice(&sys.h_cols[i]);
            Constraint {
                coeffs,
                rhs: ff.coeff(m).to_f64(),
            }
        })
        .collect();
    let prob = SDPProblem {
        block_dims: vec![sys.basis.len()],
        n_free: sys.h_vars.len(),
        objective: vec![],
        constraints,
        sense: Sense::Feasibility,
    };
    let sol = sdp::solve(&prob, SOLVER_TOL);
    Ok(match sol.status {
        Status::Optimal => {
            let h = sys.ideal_coeffs(ideal, &sol.free);
            let residual = sys.residual_against(ideal, &sol.blocks[0], &h, f);
            MembershipOutcome::Feasible(SigmaCertificate {
                degree: d,
                basis: sys.basis.clone(),
                gram: sol.blocks.into_iter().next().expect("one block"),
                ideal_coeffs: h,
                residual,
            })
        }
        Status::Infeasible => {
            MembershipOutcome::Infeasible(sol.infeasibility.expect("certificate attached"))
        }
        _ => MembershipOutcome::Inaccurate(sol.warnings.join("; ")),
    })
}

/// Support value of the theta body `TH(I)_d` in direction `u`.
pub fn theta_support(ideal: &IdealSpec, d: u32, u: &[f64]) -> Result<SupportOutcome, RelaxError> {
    if u.len() != ideal.arity() {
        return Err(RelaxError::Input(format!(
            "direction has {} coordinates, expected {}",
            u.len(),
            ideal.arity()
        )));
    }
    if u.iter().map(|v| v * v).sum::<f64>() <= 0.0 {
        return Err(RelaxError::Input("direction must be nonzero".into()));
    }
    let sys = SigmaSystem::build(ideal, d);
    let n = ideal.arity();
    let one = Monomial::constant(n);
    let width = sys.svec_len + sys.h_vars.len() + 1;
    let mut constraints = Vec::with_capacity(sys.rows.len());
    for (i, m) in sys.rows.iter().enumerate() {
        let mut coeffs = Vec::with_capacity(width);
        coeffs.extend_from_slice(&sys.gram_cols[i]);
        coeffs.extend_from_slice(&sys.h_cols[i]);
        coeffs.push(if *m == one { -1.0 } else { 0.0 });
        let mut rhs = 0.0;
        for k in 0..n {
            if *m == Monomial::variable(n, k) {
                rhs = -u[k];
            }
        }
        constraints.push(Constraint { coeffs, rhs });
    }
    let mut objective = vec![0.0; width];
    objective[width - 1] = 1.0;
    let prob = SDPProblem {
        block_dims: vec![sys.basis.len()],
        n_free: sys.h_vars.len() + 1,
        objective,
        constraints,
        sense: Sense::Minimize,
    };
    let sol = sdp::solve(&prob, SOLVER_TOL);
    Ok(match sol.status {
        Status::Infeasible => SupportOutcome::Unbounded,
        Status::Unbounded => {
            SupportOutcome::Inaccurate("support objective unbounded below (degenerate span)".into())
        }
        _ => match super::usable_optimum(&sol, 1e-6) {
            Some(_) => SupportOutcome::Value(*sol.free.last().expect("t variable")),
            None => SupportOutcome::Inaccurate(sol.warnings.join("; ")),
        },
    })
}

/// Point membership in `TH(I)_d` via the normalized separation
/// program, with an exact precheck for linear polynomials lying in the
/// truncated ideal span (both signs of those are in the cone, so the
/// theta body is contained in their zero sets).
pub fn theta_point_member(ideal: &IdealSpec, d: u32, x: &Point) -> Result<Verdict, RelaxError> {
    if x.arity() != ideal.arity() {
        return Err(RelaxError::Input(format!(
            "point has {} coordinates, expected {}",
            x.arity(),
            ideal.arity()
        )));
    }
    let xs = x.to_f64s();

    for (lin, h) in ideal_linear_elements(ideal, d)? {
        let v = lin.evaluate_f64(&xs);
        if v.abs() > MEMBER_TOL {
            let oriented = if v > 0.0 { lin.neg() } else { lin.clone() };
            let (sep_unit, scale) = rescale_unit_sup(&oriented.to_float());
            let margin = -sep_unit.evaluate_f64(&xs);
            let sign = if v > 0.0 { -1.0 } else { 1.0 };
            let h_scaled: Vec<Polynomial> = h
                .iter()
                .map(|hj| {
                    hj.to_float()
                        .scale(&Scalar::Float(sign / scale))
                        .expect("float scale")
                })
                .collect();
            let sys = SigmaSystem::build(ideal, d);
            let zero_gram = sdp::SymMatrix::zeros(sys.basis.len());
            let residual = sys.residual_against(ideal, &zero_gram, &h_scaled, &sep_unit);
            return Ok(Verdict {
                kind: VerdictKind::Out,
                margin,
                separator: Some(sep_unit),
                low_confidence: false,
                certificate: Some(CertificatePayload::SumOfSquaresModIdeal(SigmaCertificate {
                    degree: d,
                    basis: sys.basis.clone(),
                    gram: zero_gram,
                    ideal_coeffs: h_scaled,
                    residual,
                })),
                notes: vec![
                    "a linear polynomial lies in the truncated ideal span and separates x".into(),
                ],
            });
        }
    }

    let sys = SigmaSystem::build(ideal, d);
    let n = ideal.arity();
    let lin_basis = monomial_basis(n, 1);
    let n_lin = lin_basis.len();
    let width = sys.svec_len + sys.h_vars.len() + n_lin;

    let mut constraints = Vec::with_capacity(sys.rows.len() + 1);
    for (i, m) in sys.rows.iter().enumerate() {
        let mut coeffs = Vec::with_capacity(width);
        coeffs.extend_from_slice(&sys.gram_cols[i]);
        coeffs.extend_from_slice(&sys.h_cols[i]);
        let mut tail = vec![0.0; n_lin];
        if let Some(pos) = lin_basis.iter().position(|b| b == m) {
            tail[pos] = -1.0;
        }
        coeffs.extend_from_slice(&tail);
        constraints.push(Constraint { coeffs, rhs: 0.0 });
    }
    constraints.push(trace_normalization_row(&[sys.basis.len()], width));

    let mut objective = vec![0.0; width];
    for (pos, m) in lin_basis.iter().enumerate() {
        objective[sys.svec_len + sys.h_vars.len() + pos] = m
            .0
            .iter()
            .zip(&xs)
            .map(|(&e, &v)| v.powi(e as i32))
            .product();
    }
    let prob = SDPProblem {
        block_dims: vec![sys.basis.len()],
        n_free: sys.h_vars.len() + n_lin,
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
        let mut sep = Polynomial::zero(ideal.vars().to_vec(), CoeffMode::Float);
        for (pos, m) in lin_basis.iter().enumerate() {
            sep.add_term(
                m.clone(),
                Scalar::Float(sol.free[sys.h_vars.len() + pos]),
            );
        }
        let (sep_unit, scale) = rescale_unit_sup(&sep);
        let gram = sol.blocks[0].scale(1.0 / scale);
        let h: Vec<Polynomial> = sys
            .ideal_coeffs(ideal, &sol.free[..sys.h_vars.len()])
            .into_iter()
            .map(|hj| hj.scale(&Scalar::Float(1.0 / scale)).expect("float"))
            .collect();
        let residual = sys.residual_against(ideal, &gram, &h, &sep_unit);
        let margin = -sep_unit.evaluate_f64(&xs);
        Ok(Verdict {
            kind: VerdictKind::Out,
            margin,
            separator: Some(sep_unit),
            low_confidence: false,
            certificate: Some(CertificatePayload::SumOfSquaresModIdeal(SigmaCertificate {
                degree: d,
                basis: sys.basis.clone(),
                gram,
                ideal_coeffs: h,
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

/// Exact computation of the linear polynomials (degree <= 1) in the
/// truncated ideal span `span{X^beta g_j : deg <= 2d}`. Returns each
/// nonzero linear element together with the coefficient polynomials
/// `h_j` witnessing it.
pub fn ideal_linear_elements(
    ideal: &IdealSpec,
    d: u32,
) -> Result<Vec<(Polynomial, Vec<Polynomial>)>, RelaxError> {
    let n = ideal.arity();
    let exact: Vec<Polynomial> = ideal
        .generators()
        .iter()
        .map(|g| g.to_exact())
        .collect::<Result<_, _>>()?;

    // products X^beta g_j of degree <= 2d
    let mut products: Vec<(usize, Monomial, Polynomial)> = Vec::new();
    for (j, g) in exact.iter().enumerate() {
        let deg_g = g.degree().max(0) as u32;
        if deg_g > 2 * d {
            continue;
        }
        for beta in monomial_basis(n, 2 * d - deg_g) {
            let mut shifted = Polynomial::zero(g.vars().to_vec(), CoeffMode::Exact);
            for (gamma, c) in g.terms() {
                shifted.add_term(beta.mul(gamma), c.clone());
            }
            products.push((j, beta, shifted));
        }
    }
    if products.is_empty() {
        return Ok(Vec::new());
    }

    // high-degree columns: monomials of degree 2..2d
    let high: Vec<Monomial> = monomial_basis(n, 2 * d)
        .into_iter()
        .filter(|m| m.degree() >= 2)
        .collect();
    let high_index: BTreeMap<&Monomial, usize> =
        high.iter().enumerate().map(|(i, m)| (m, i)).collect();

    // kernel of the map (lambda_i) -> sum_i lambda_i * high(prod_i)
    let mut cols: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); products.len()]; high.len()];
    for (i, (_, _, prod)) in products.iter().enumerate() {
        for (m, c) in prod.terms() {
            if let Some(&row) = high_index.get(m) {
                if let Scalar::Rational(q) = c {
                    cols[row][i] = q.clone();
                }
            }
        }
    }
    let kernel = rational_nullspace(&cols, products.len());

    let mut out = Vec::new();
    for lambda in kernel {
        let mut lin = Polynomial::zero(ideal.vars().to_vec(), CoeffMode::Exact);
        let mut hs: Vec<Polynomial> = ideal
            .generators()
            .iter()
            .map(|_| Polynomial::zero(ideal.vars().to_vec(), CoeffMode::Exact))
            .collect();
        for (coef, (j, beta, prod)) in lambda.iter().zip(&products) {
            if coef.is_zero() {
                continue;
            }
            let s = Scalar::Rational(coef.clone());
            hs[*j].add_term(beta.clone(), s.clone());
            for (m, c) in prod.terms() {
                if m.degree() <= 1 {
                    lin.add_term(m.clone(), c.mul(&s));
                }
            }
        }
        if !lin.is_zero() {
            out.push((lin, hs));
        }
    }
    Ok(out)
}

/// Basis of the null space of the rational matrix given by `rows`
/// (each of length `width`).
fn rational_nullspace(rows: &[Vec<BigRational>], width: usize) -> Vec<Vec<BigRational>> {
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    let nrows = m.len();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..width {
        let Some(pr) = (r..nrows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pr);
        let inv = m[r][c].clone();
        for v in m[r].iter_mut() {
            *v = &*v / &inv;
        }
        for i in 0..nrows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for c2 in 0..width {
                    let sub = &f * &m[r][c2];
                    m[i][c2] = &m[i][c2] - sub;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == nrows {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in 0..width {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![BigRational::zero(); width];
        v[free] = BigRational::from_integer(1.into());
        for (pi, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -m[pi][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Feasibility convenience mirroring `qm_member_is_feasible`.
pub fn sigma_member_is_feasible(ideal: &IdealSpec, d: u32, f: &Polynomial) -> bool {
    matches!(
        sigma_member(ideal, d, f),
        Ok(MembershipOutcome::Feasible(ref c)) if c.residual <= 1e-6
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_expr;

    fn circle() -> IdealSpec {
        let vars: Vec<String> = vec!["X".into(), "Y".into()];
        IdealSpec::new(vec![
            parse_expr("X^2 + Y^2 - 1", &vars, CoeffMode::Exact).unwrap()
        ])
        .unwrap()
    }

    #[test]
    fn one_minus_x_on_circle() {
        let vars: Vec<String> = vec!["X".into(), "Y".into()];
        let f = parse_expr("1 - X", &vars, CoeffMode::Exact).unwrap();
        let out = sigma_member(&circle(), 1, &f).unwrap();
        match out {
            MembershipOutcome::Feasible(cert) => {
                assert!(cert.residual <= 1e-7, "residual {}", cert.residual);
                // known witness: sigma = ((1-X)^2 + Y^2)/2, h = -1/2
                assert!(sdp::eigmin(&cert.gram).0 >= -1e-7);
            }
            other => panic!("expected feasible: {other:?}"),
        }
        let g = parse_expr("1 + X", &vars, CoeffMode::Exact).unwrap();
        assert!(sigma_member(&circle(), 1, &g).unwrap().is_feasible());
    }

    #[test]
    fn just_below_support_is_infeasible() {
        let vars: Vec<String> = vec!["X".into(), "Y".into()];
        let f = parse_expr("0.99 - X", &vars, CoeffMode::Exact).unwrap();
        for d in [1, 2] {
            let out = sigma_member(&circle(), d, &f).unwrap();
            assert!(out.is_infeasible(), "d={d}: {out:?}");
        }
    }

    #[test]
    fn circle_support_is_one() {
        for u in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            let s = theta_support(&circle(), 1, &u).unwrap();
            assert!(
                (s.value().expect("value") - 1.0).abs() <= 1e-5,
                "direction {u:?}: {s:?}"
            );
        }
    }

    #[test]
    fn circle_membership() {
        let origin = Point::from_f64s(&[0.0, 0.0]);
        let v = theta_point_member(&circle(), 1, &origin).unwrap();
        assert!(v.is_in(), "{v:?}");
        assert!(!v.low_confidence);

        let outside = Point::from_f64s(&[1.05, 0.0]);
        let v = theta_point_member(&circle(), 1, &outside).unwrap();
        assert!(v.is_out(), "{v:?}");
        assert!(v.margin >= 0.04, "margin {}", v.margin);
        let sep = v.separator.as_ref().unwrap();
        assert!(sep.evaluate_f64(&[1.05, 0.0]) < 0.0);
        assert!(sigma_member_is_feasible(&circle(), 1, sep));
    }

    #[test]
    fn linear_elements_of_degenerate_ideal() {
        // I = <X>: X itself is a linear element of the truncated span,
        // so membership forces the X coordinate to vanish
        let vars: Vec<String> = vec!["X".into(), "Y".into()];
        let ideal =
            IdealSpec::new(vec![parse_expr("X", &vars, CoeffMode::Exact).unwrap()]).unwrap();
        let lins = ideal_linear_elements(&ideal, 1).unwrap();
        assert!(!lins.is_empty());
        let v = theta_point_member(&ideal, 1, &Point::from_f64s(&[0.5, 0.0])).unwrap();
        assert!(v.is_out(), "{v:?}");
        assert!((v.margin - 0.5).abs() <= 1e-9, "margin {}", v.margin);
    }

    #[test]
    fn circle_has_no_linear_ideal_elements() {
        assert!(ideal_linear_elements(&circle(), 2).unwrap().is_empty());
    }
}
