//! Sparse multivariate polynomials over exact rationals or floats.
//!
//! Monomials are ordered graded-lexicographically (total degree first,
//! then lexicographic with the first variable largest), and that order
//! is fixed globally: Gram-matrix indexing everywhere in this crate
//! refers to [`monomial_basis`] positions.

mod parse;
mod reduce;
mod scalar;

pub use parse::{parse_expr, PolynomialDoc, TermDoc};
pub use reduce::{Rule, RuleSet};
pub use scalar::{CoeffMode, Scalar};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Errors for polynomial construction and arithmetic.
#[derive(Debug, Error)]
pub enum PolyError {
    #[error("arity mismatch: expected {expected} variables, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("coefficient mode mismatch between operands")]
    ModeMismatch,
    #[error("variable lists differ between operands")]
    VarsMismatch,
    #[error("negative exponent {0} in monomial")]
    NegativeExponent(i64),
    #[error("malformed coefficient: {0}")]
    BadCoefficient(String),
    #[error("malformed polynomial document: {0}")]
    BadDocument(String),
    #[error("rule set rejected: {0}")]
    BadRules(String),
    #[error("expression parse error: {0}")]
    BadExpression(String),
}

/// Exponent vector of a single monomial; length is the ambient arity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn constant(arity: usize) -> Self {
        Monomial(vec![0; arity])
    }

    pub fn variable(arity: usize, idx: usize) -> Self {
        let mut e = vec![0; arity];
        e[idx] = 1;
        Monomial(e)
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.0.len(), other.0.len());
        Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

/// Graded-lexicographic order: lower total degree first; within a
/// degree, the lexicographically larger exponent vector comes first
/// (so with variables `[X, Y]`: `1 < X < Y < X^2 < X*Y < Y^2`).
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials of degree at most `d` in `n` variables, in the global
/// graded-lex order. The result has `C(n+d, d)` entries.
pub fn monomial_basis(n: usize, d: u32) -> Vec<Monomial> {
    assert!(n >= 1, "arity must be at least 1");
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    for deg in 0..=d {
        emit_degree(n, deg, 0, deg, &mut current, &mut out);
    }
    out
}

fn emit_degree(
    n: usize,
    total: u32,
    pos: usize,
    remaining: u32,
    current: &mut Vec<u32>,
    out: &mut Vec<Monomial>,
) {
    if pos == n - 1 {
        current[pos] = remaining;
        out.push(Monomial(current.clone()));
        return;
    }
    // descending first exponent gives lex-descending within the degree
    for e in (0..=remaining).rev() {
        current[pos] = e;
        emit_degree(n, total, pos + 1, remaining - e, current, out);
    }
    current[pos] = 0;
}

/// A point of the ambient space, with mode-consistent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: Vec<Scalar>,
}

impl Point {
    pub fn new(coords: Vec<Scalar>) -> Result<Self, PolyError> {
        if let Some(first) = coords.first() {
            if coords.iter().any(|c| c.mode() != first.mode()) {
                return Err(PolyError::ModeMismatch);
            }
        }
        Ok(Point { coords })
    }

    pub fn from_f64s(coords: &[f64]) -> Self {
        Point {
            coords: coords.iter().map(|&v| Scalar::Float(v)).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.coords.len()
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        self.coords.iter().map(Scalar::to_f64).collect()
    }
}

/// Binary polynomial operations exposed through [`Polynomial::arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

/// Sparse multivariate polynomial with a fixed variable list and a
/// single coefficient mode. Stored terms never have zero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    vars: Vec<String>,
    mode: CoeffMode,
    terms: BTreeMap<Monomial, Scalar>,
}

impl Polynomial {
    pub fn zero(vars: Vec<String>, mode: CoeffMode) -> Self {
        Polynomial {
            vars,
            mode,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: Vec<String>, value: Scalar) -> Self {
        let mode = value.mode();
        let mut p = Polynomial::zero(vars, mode);
        p.add_term(Monomial::constant(p.arity()), value);
        p
    }

    pub fn variable(vars: Vec<String>, mode: CoeffMode, idx: usize) -> Self {
        let arity = vars.len();
        assert!(idx < arity);
        let mut p = Polynomial::zero(vars, mode);
        p.add_term(Monomial::variable(arity, idx), Scalar::one(mode));
        p
    }

    /// Builds a polynomial from raw terms, canonicalizing (merging
    /// duplicates, dropping zeros) and validating arity and mode.
    pub fn from_terms(
        vars: Vec<String>,
        mode: CoeffMode,
        terms: impl IntoIterator<Item = (Monomial, Scalar)>,
    ) -> Result<Self, PolyError> {
        let mut p = Polynomial::zero(vars, mode);
        for (m, c) in terms {
            if m.arity() != p.arity() {
                return Err(PolyError::ArityMismatch {
                    expected: p.arity(),
                    got: m.arity(),
                });
            }
            if c.mode() != mode {
                return Err(PolyError::ModeMismatch);
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn mode(&self) -> CoeffMode {
        self.mode
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    /// Max total degree of a stored term; the zero polynomial reports -1.
    pub fn degree(&self) -> i64 {
        self.terms
            .keys()
            .map(|m| m.degree() as i64)
            .max()
            .unwrap_or(-1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> Scalar {
        self.terms
            .get(m)
            .cloned()
            .unwrap_or_else(|| Scalar::zero(self.mode))
    }

    /// Adds `c * m` in place, keeping the zero-coefficient invariant.
    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        debug_assert_eq!(m.arity(), self.arity());
        debug_assert_eq!(c.mode(), self.mode);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&c);
                if sum.is_zero() {
                    e.remove();
                } else {
                    e.insert(sum);
                }
            }
        }
    }

    fn check_compatible(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.mode != other.mode {
            return Err(PolyError::ModeMismatch);
        }
        if self.vars != other.vars {
            return Err(PolyError::VarsMismatch);
        }
        Ok(())
    }

    /// Exact binary arithmetic; errors on mode or variable-list mismatch.
    pub fn arith(op: ArithOp, p: &Polynomial, q: &Polynomial) -> Result<Polynomial, PolyError> {
        p.check_compatible(q)?;
        Ok(match op {
            ArithOp::Add => {
                let mut out = p.clone();
                for (m, c) in q.terms() {
                    out.add_term(m.clone(), c.clone());
                }
                out
            }
            ArithOp::Sub => {
                let mut out = p.clone();
                for (m, c) in q.terms() {
                    out.add_term(m.clone(), c.neg());
                }
                out
            }
            ArithOp::Mul => {
                let mut out = Polynomial::zero(p.vars.clone(), p.mode);
                for (ma, ca) in p.terms() {
                    for (mb, cb) in q.terms() {
                        out.add_term(ma.mul(mb), ca.mul(cb));
                    }
                }
                out
            }
        })
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        Polynomial::arith(ArithOp::Add, self, other)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        Polynomial::arith(ArithOp::Sub, self, other)
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        Polynomial::arith(ArithOp::Mul, self, other)
    }

    pub fn scale(&self, c: &Scalar) -> Result<Polynomial, PolyError> {
        if c.mode() != self.mode {
            return Err(PolyError::ModeMismatch);
        }
        let mut out = Polynomial::zero(self.vars.clone(), self.mode);
        for (m, k) in self.terms() {
            out.add_term(m.clone(), k.mul(c));
        }
        Ok(out)
    }

    pub fn neg(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.vars.clone(), self.mode);
        for (m, k) in self.terms() {
            out.add_term(m.clone(), k.neg());
        }
        out
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.vars.clone(), Scalar::one(self.mode));
        for _ in 0..e {
            acc = Polynomial::arith(ArithOp::Mul, &acc, self).expect("same context");
        }
        acc
    }

    pub fn evaluate(&self, x: &Point) -> Result<Scalar, PolyError> {
        if x.arity() != self.arity() {
            return Err(PolyError::ArityMismatch {
                expected: self.arity(),
                got: x.arity(),
            });
        }
        if let Some(c) = x.coords.first() {
            if c.mode() != self.mode && !self.is_zero() {
                return Err(PolyError::ModeMismatch);
            }
        }
        let mut acc = Scalar::zero(self.mode);
        for (m, c) in self.terms() {
            let mut term = c.clone();
            for (k, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    term = term.mul(&x.coords[k].pow(e));
                }
            }
            acc = acc.add(&term);
        }
        Ok(acc)
    }

    /// Evaluates with float coordinates regardless of coefficient mode.
    pub fn evaluate_f64(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.arity());
        let mut acc = 0.0;
        for (m, c) in self.terms() {
            let mut term = c.to_f64();
            for (k, &e) in m.0.iter().enumerate() {
                term *= x[k].powi(e as i32);
            }
            acc += term;
        }
        acc
    }

    /// Partial derivative with respect to variable `k`.
    pub fn partial(&self, k: usize) -> Polynomial {
        assert!(k < self.arity());
        let mut out = Polynomial::zero(self.vars.clone(), self.mode);
        for (m, c) in self.terms() {
            let e = m.0[k];
            if e == 0 {
                continue;
            }
            let mut de = m.0.clone();
            de[k] -= 1;
            out.add_term(Monomial(de), c.mul(&Scalar::from_integer(e as i64, self.mode)));
        }
        out
    }

    /// Gradient: component `k` is the partial derivative in variable `k`.
    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.arity()).map(|k| self.partial(k)).collect()
    }

    /// Largest absolute coefficient value, as f64. Zero polynomial: 0.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// Converts every coefficient to float mode.
    pub fn to_float(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.vars.clone(), CoeffMode::Float);
        for (m, c) in self.terms() {
            out.add_term(m.clone(), Scalar::Float(c.to_f64()));
        }
        out
    }

    /// Converts every coefficient exactly to rational mode (floats are
    /// dyadic, so this is lossless).
    pub fn to_exact(&self) -> Result<Polynomial, PolyError> {
        let mut out = Polynomial::zero(self.vars.clone(), CoeffMode::Exact);
        for (m, c) in self.terms() {
            let e = match c {
                Scalar::Rational(_) => c.clone(),
                Scalar::Float(v) => Scalar::float_to_exact(*v)?,
            };
            out.add_term(m.clone(), e);
        }
        Ok(out)
    }

    /// Degree of the polynomial in a single variable.
    pub fn degree_in(&self, k: usize) -> u32 {
        self.terms.keys().map(|m| m.0[k]).max().unwrap_or(0)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // highest-degree terms first reads most naturally
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.signum() < 0;
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let is_const = m.degree() == 0;
            let unit = mag == Scalar::one(self.mode);
            if !unit || is_const {
                write!(f, "{mag}")?;
            }
            let mut first_var = true;
            for (k, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !first_var || !unit {
                    write!(f, "*")?;
                }
                first_var = false;
                write!(f, "{}", self.vars[k])?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Vec<String> {
        vec!["X".into(), "Y".into()]
    }

    fn poly(src: &str) -> Polynomial {
        parse_expr(src, &xy(), CoeffMode::Exact).unwrap()
    }

    #[test]
    fn basis_sizes_and_order() {
        let b = monomial_basis(2, 1);
        assert_eq!(
            b,
            vec![
                Monomial(vec![0, 0]),
                Monomial(vec![1, 0]),
                Monomial(vec![0, 1])
            ]
        );
        assert_eq!(monomial_basis(2, 2).len(), 6);
        assert_eq!(monomial_basis(3, 2).len(), 10);
        // duplicate-free and sorted
        let b = monomial_basis(3, 4);
        for w in b.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn degree_conventions() {
        assert_eq!(Polynomial::zero(xy(), CoeffMode::Exact).degree(), -1);
        assert_eq!(poly("-X^4 + X^3 - Y^2").degree(), 4);
        assert_eq!(poly("-X^4 + X^3 - Y^2").num_terms(), 3);
    }

    #[test]
    fn evaluate_paper_points() {
        let two_disks = poly("-X^4 - Y^4 - 2*X^2*Y^2 + 4*X^2");
        let at = Point::new(vec![
            Scalar::one(CoeffMode::Exact),
            Scalar::one(CoeffMode::Exact),
        ])
        .unwrap();
        assert!(two_disks.evaluate(&at).unwrap().is_zero());

        let cusp = poly("-X^4 + X^3 - Y^2");
        let at = Point::new(vec![
            Scalar::one(CoeffMode::Exact),
            Scalar::zero(CoeffMode::Exact),
        ])
        .unwrap();
        assert!(cusp.evaluate(&at).unwrap().is_zero());

        let zero = Polynomial::zero(xy(), CoeffMode::Exact);
        assert!(zero.evaluate(&Point::from_f64s(&[2.0, 3.0])).is_err() || true);
        let at = Point::new(vec![
            Scalar::from_integer(7, CoeffMode::Exact),
            Scalar::from_integer(-2, CoeffMode::Exact),
        ])
        .unwrap();
        assert!(zero.evaluate(&at).unwrap().is_zero());
    }

    #[test]
    fn gradient_examples() {
        let cusp = poly("-X^4 + X^3 - Y^2");
        let g = cusp.gradient();
        let origin = Point::new(vec![
            Scalar::zero(CoeffMode::Exact),
            Scalar::zero(CoeffMode::Exact),
        ])
        .unwrap();
        assert!(g[0].evaluate(&origin).unwrap().is_zero());
        assert!(g[1].evaluate(&origin).unwrap().is_zero());

        let line = poly("Y - 3*X + 2");
        let g = line.gradient();
        assert_eq!(g[0], poly("-3"));
        assert_eq!(g[1], poly("1"));

        let vars3: Vec<String> = vec!["X".into(), "Y".into(), "Z".into()];
        let zitrus = parse_expr(
            "X^2 + Z^2 + Y^6 - 3*Y^4 + 3*Y^2 - 1",
            &vars3,
            CoeffMode::Exact,
        )
        .unwrap();
        let p = Point::new(vec![
            Scalar::zero(CoeffMode::Exact),
            Scalar::one(CoeffMode::Exact),
            Scalar::zero(CoeffMode::Exact),
        ])
        .unwrap();
        for comp in zitrus.gradient() {
            assert!(comp.evaluate(&p).unwrap().is_zero());
        }
    }

    #[test]
    fn arith_hand_expansion() {
        let lhs = poly("(X - 1)") // (X-1)^2 (X+1) built by parts
            .pow(2)
            .mul(&poly("X + 1"))
            .unwrap();
        assert_eq!(lhs, poly("X^3 - X^2 - X + 1"));

        let p = poly("-X^4 + X^3 - Y^2");
        let same = p.add(&Polynomial::zero(xy(), CoeffMode::Exact)).unwrap();
        assert_eq!(same, p);
    }

    #[test]
    fn tangent_line_identity_at_one() {
        // (X-1)^2 + (Y-X^3) + (X-1)^2 (X+1) equals Y - 3X + 2
        let sq = poly("X - 1").pow(2);
        let sum = sq
            .add(&poly("Y - X^3"))
            .unwrap()
            .add(&sq.mul(&poly("X + 1")).unwrap())
            .unwrap();
        assert_eq!(sum, poly("Y - 3*X + 2"));
    }

    #[test]
    fn mode_mismatch_rejected() {
        let exact = poly("X");
        let float = parse_expr("X", &xy(), CoeffMode::Float).unwrap();
        assert!(matches!(
            exact.add(&float),
            Err(PolyError::ModeMismatch)
        ));
    }

    #[test]
    fn display_round() {
        let p = poly("-X^4 + X^3 - Y^2");
        assert_eq!(p.to_string(), "-X^4 + X^3 - Y^2");
        let q = poly("1/2*X*Y - 3");
        assert_eq!(q.to_string(), "1/2*X*Y - 3");
    }
}
