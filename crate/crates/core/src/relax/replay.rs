//! Exact certificate replay.
//!
//! Numeric Gram matrices are projected to the PSD cone, rounded to
//! dyadic rationals, and re-expanded with exact polynomial arithmetic
//! against the target. The reported residual bounds how far the
//! rounded certificate is from an exact identity.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::poly::{CoeffMode, PolyError, Polynomial, Scalar};
use crate::sdp::{eigmin, SymMatrix};

use super::{IdealSpec, QMCertificate, RelaxError, SemialgebraicSet, SigmaCertificate};

/// Outcome of an exact replay.
#[derive(Debug, Clone)]
pub struct ReplayReport {
    /// Sup-norm of the exact residual coefficients.
    pub residual: f64,
    /// Smallest eigenvalue over all rounded Gram blocks.
    pub gram_eigmin: f64,
    /// The exact residual polynomial itself.
    pub residual_poly: Polynomial,
}

const DYADIC_BITS: u32 = 48;

fn round_dyadic(v: f64) -> Result<Scalar, PolyError> {
    if !v.is_finite() || v.abs() > 1e12 {
        return Err(PolyError::BadCoefficient(format!(
            "certificate entry {v} out of replayable range"
        )));
    }
    let scale = (1u64 << DYADIC_BITS) as f64;
    let num = (v * scale).round() as i128;
    Ok(Scalar::Rational(BigRational::new(
        BigInt::from(num),
        BigInt::from(1u128 << DYADIC_BITS),
    )))
}

/// PSD projection (eigenvalue clipping) followed by dyadic rounding.
fn project_and_round(g: &SymMatrix) -> Result<(Vec<Vec<Scalar>>, SymMatrix), PolyError> {
    let eig = nalgebra::SymmetricEigen::new(g.to_dmatrix());
    let k = g.dim();
    let mut clipped = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let lam = eig.eigenvalues[i].max(0.0);
        if lam == 0.0 {
            continue;
        }
        let q = eig.eigenvectors.column(i);
        for r in 0..k {
            for c in 0..k {
                clipped[(r, c)] += lam * q[r] * q[c];
            }
        }
    }
    let projected = SymMatrix::from_dmatrix(&clipped);
    let mut exact = vec![vec![Scalar::zero(CoeffMode::Exact); k]; k];
    let mut rounded = SymMatrix::zeros(k);
    for i in 0..k {
        for j in i..k {
            let r = round_dyadic(projected.entry(i, j))?;
            rounded.set(i, j, r.to_f64());
            exact[i][j] = r.clone();
            exact[j][i] = r;
        }
    }
    Ok((exact, rounded))
}

/// Expands `v^T G v * multiplier` exactly from a rounded Gram.
fn expand_exact(
    basis: &[crate::poly::Monomial],
    gram: &[Vec<Scalar>],
    multiplier: &Polynomial,
) -> Result<Polynomial, PolyError> {
    let vars = multiplier.vars().to_vec();
    let mut acc = Polynomial::zero(vars, CoeffMode::Exact);
    let two = Scalar::from_integer(2, CoeffMode::Exact);
    for a in 0..basis.len() {
        for b in a..basis.len() {
            let entry = &gram[a][b];
            if entry.is_zero() {
                continue;
            }
            let w = if a == b {
                entry.clone()
            } else {
                entry.mul(&two)
            };
            let pair = basis[a].mul(&basis[b]);
            for (gamma, c) in multiplier.terms() {
                acc.add_term(pair.mul(gamma), c.mul(&w));
            }
        }
    }
    Ok(acc)
}

/// Replays a quadratic-module certificate exactly against `target`.
pub fn replay_qm(
    set: &SemialgebraicSet,
    cert: &QMCertificate,
    target: &Polynomial,
) -> Result<ReplayReport, RelaxError> {
    let target = target.to_exact()?;
    let mut multipliers = vec![Polynomial::constant(
        set.vars().to_vec(),
        Scalar::one(CoeffMode::Exact),
    )];
    for p in set.inequalities() {
        multipliers.push(p.to_exact()?);
    }
    if multipliers.len() != cert.grams.len() {
        return Err(RelaxError::Input(format!(
            "certificate has {} Gram blocks but the set implies {}",
            cert.grams.len(),
            multipliers.len()
        )));
    }
    let mut total = Polynomial::zero(set.vars().to_vec(), CoeffMode::Exact);
    let mut worst_eig = f64::INFINITY;
    for (gram, mult) in cert.grams.iter().zip(&multipliers) {
        let (exact, rounded) = project_and_round(gram).map_err(RelaxError::Poly)?;
        worst_eig = worst_eig.min(eigmin(&rounded).0);
        let part = expand_exact(&cert.basis, &exact, mult)?;
        total = total.add(&part)?;
    }
    let residual_poly = target.sub(&total)?;
    Ok(ReplayReport {
        residual: residual_poly.max_abs_coeff(),
        gram_eigmin: worst_eig,
        residual_poly,
    })
}

/// Replays a sums-of-squares-modulo-ideal certificate exactly.
pub fn replay_sigma(
    ideal: &IdealSpec,
    cert: &SigmaCertificate,
    target: &Polynomial,
) -> Result<ReplayReport, RelaxError> {
    let target = target.to_exact()?;
    let (exact, rounded) = project_and_round(&cert.gram).map_err(RelaxError::Poly)?;
    let one = Polynomial::constant(ideal.vars().to_vec(), Scalar::one(CoeffMode::Exact));
    let mut total = expand_exact(&cert.basis, &exact, &one)?;
    if cert.ideal_coeffs.len() != ideal.generators().len() {
        return Err(RelaxError::Input(
            "certificate ideal coefficients do not match the generators".into(),
        ));
    }
    for (h, g) in cert.ideal_coeffs.iter().zip(ideal.generators()) {
        let mut h_exact = Polynomial::zero(ideal.vars().to_vec(), CoeffMode::Exact);
        for (m, c) in h.to_float().terms() {
            h_exact.add_term(m.clone(), round_dyadic(c.to_f64()).map_err(RelaxError::Poly)?);
        }
        let part = h_exact.mul(&g.to_exact()?)?;
        total = total.add(&part)?;
    }
    let residual_poly = target.sub(&total)?;
    Ok(ReplayReport {
        residual: residual_poly.max_abs_coeff(),
        gram_eigmin: eigmin(&rounded).0,
        residual_poly,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_expr;
    use crate::relax::{qm_member, sigma_member, MembershipOutcome, SemialgebraicSet};

    #[test]
    fn replay_tangent_certificate() {
        let vars: Vec<String> = vec!["X".into(), "Y".into()];
        let set = SemialgebraicSet::new(
            ["Y", "1 - Y", "1 + X", "Y - X^3"]
                .iter()
                .map(|s| parse_expr(s, &vars, CoeffMode::Exact).unwrap())
                .collect(),
        )
        .unwrap();
        let f = parse_expr("Y - 3X + 2", &vars, CoeffMode::Exact).unwrap();
        let MembershipOutcome::Feasible(cert) = qm_member(&set, 1, &f).unwrap() else {
            panic!("expected feasible");
        };
        let report = replay_qm(&set, &cert, &f).unwrap();
        assert!(
            report.residual <= 1e-6,
            "exact replay residual {}",
            report.residual
        );
        assert!(report.gram_eigmin >= -1e-9);
    }

    #[test]
    fn replay_sigma_certificate() {
        let vars: Vec<String> = vec!["X".into(), "Y".into()];
        let circle = IdealSpec::new(vec![
            parse_expr("X^2 + Y^2 - 1", &vars, CoeffMode::Exact).unwrap(),
        ])
        .unwrap();
        let f = parse_expr("1 - X", &vars, CoeffMode::Exact).unwrap();
        let MembershipOutcome::Feasible(cert) = sigma_member(&circle, 1, &f).unwrap() else {
            panic!("expected feasible");
        };
        let report = replay_sigma(&circle, &cert, &f).unwrap();
        assert!(report.residual <= 1e-6, "residual {}", report.residual);
    }
}
