//! Rewriting modulo power-substitution rules.
//!
//! A rule replaces a pure power of one dedicated variable, `v^e -> q`.
//! This is enough to verify every identity in scope — adjoined square
//! roots (`t^2 -> 1/2`) and trigonometric symbols (`s^2 -> 1 - c^2`) —
//! without any Groebner machinery.

use super::{CoeffMode, PolyError, Polynomial};

/// A single substitution rule `var^power -> replacement`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub var: usize,
    pub power: u32,
    pub replacement: Polynomial,
}

/// A validated, terminating rule set.
///
/// Construction enforces, for each rule on variable `v` with power `e`:
/// the replacement's degree in `v` is below `e`, and the replacement is
/// free of every other rule variable. Each rewrite then strictly
/// lowers the total exponent of rule variables, so reduction
/// terminates; rule sets outside this fragment are rejected.
#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>, vars: &[String], mode: CoeffMode) -> Result<Self, PolyError> {
        let rule_vars: Vec<usize> = rules.iter().map(|r| r.var).collect();
        for (i, r) in rules.iter().enumerate() {
            if r.var >= vars.len() {
                return Err(PolyError::BadRules(format!(
                    "rule variable index {} out of range",
                    r.var
                )));
            }
            if r.power == 0 {
                return Err(PolyError::BadRules(
                    "rule power must be at least 1".into(),
                ));
            }
            if rule_vars.iter().filter(|&&v| v == r.var).count() > 1 {
                return Err(PolyError::BadRules(format!(
                    "variable {} has more than one rule",
                    vars[r.var]
                )));
            }
            if r.replacement.vars() != vars {
                return Err(PolyError::VarsMismatch);
            }
            if r.replacement.mode() != mode {
                return Err(PolyError::ModeMismatch);
            }
            if r.replacement.degree_in(r.var) >= r.power {
                return Err(PolyError::BadRules(format!(
                    "replacement for {}^{} does not lower that exponent",
                    vars[r.var], r.power
                )));
            }
            for (j, other) in rules.iter().enumerate() {
                if i != j && r.replacement.degree_in(other.var) > 0 {
                    return Err(PolyError::BadRules(format!(
                        "replacement for {} mentions rule variable {}; reduction could cycle",
                        vars[r.var], vars[other.var]
                    )));
                }
            }
        }
        Ok(RuleSet { rules })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Reduces `p` to its normal form: no stored monomial has
    /// `exponent(var) >= power` for any rule. Idempotent.
    pub fn reduce(&self, p: &Polynomial) -> Result<Polynomial, PolyError> {
        if p.mode() != self.mode_hint().unwrap_or(p.mode()) {
            return Err(PolyError::ModeMismatch);
        }
        let mut current = p.clone();
        // validated rule sets terminate; the fuel guards against bugs
        let mut fuel: usize = 200_000;
        loop {
            let mut rewritten = false;
            for rule in &self.rules {
                loop {
                    let target = current.terms().find_map(|(m, c)| {
                        (m.0[rule.var] >= rule.power).then(|| (m.clone(), c.clone()))
                    });
                    let Some((mono, coeff)) = target else { break };
                    fuel = fuel.checked_sub(1).ok_or_else(|| {
                        PolyError::BadRules("reduction did not terminate".into())
                    })?;
                    rewritten = true;
                    // remove coeff * mono, add coeff * mono/var^power * replacement
                    current.add_term(mono.clone(), coeff.neg());
                    let mut rest = mono;
                    rest.0[rule.var] -= rule.power;
                    let mut shifted =
                        Polynomial::zero(current.vars().to_vec(), current.mode());
                    for (rm, rc) in rule.replacement.terms() {
                        shifted.add_term(rest.mul(rm), rc.mul(&coeff));
                    }
                    current = current.add(&shifted)?;
                }
            }
            if !rewritten {
                return Ok(current);
            }
        }
    }

    fn mode_hint(&self) -> Option<CoeffMode> {
        self.rules.first().map(|r| r.replacement.mode())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_expr;

    fn vars_cs() -> Vec<String> {
        vec!["c".into(), "s".into()]
    }

    fn rule_s2(vars: &[String]) -> RuleSet {
        let repl = parse_expr("1 - c^2", vars, CoeffMode::Exact).unwrap();
        RuleSet::new(
            vec![Rule {
                var: 1,
                power: 2,
                replacement: repl,
            }],
            vars,
            CoeffMode::Exact,
        )
        .unwrap()
    }

    #[test]
    fn pythagorean() {
        let vars = vars_cs();
        let rules = rule_s2(&vars);
        let p = parse_expr("s^2 + c^2", &vars, CoeffMode::Exact).unwrap();
        let r = rules.reduce(&p).unwrap();
        assert_eq!(r, parse_expr("1", &vars, CoeffMode::Exact).unwrap());
    }

    #[test]
    fn circle_substitution() {
        // (1-X)^2 + Y^2 - (2-2X) with Y^2 -> 1 - X^2 reduces to zero
        let vars: Vec<String> = vec!["X".into(), "Y".into()];
        let repl = parse_expr("1 - X^2", &vars, CoeffMode::Exact).unwrap();
        let rules = RuleSet::new(
            vec![Rule {
                var: 1,
                power: 2,
                replacement: repl,
            }],
            &vars,
            CoeffMode::Exact,
        )
        .unwrap();
        let p = parse_expr("(1-X)^2 + Y^2 - (2 - 2X)", &vars, CoeffMode::Exact).unwrap();
        assert!(rules.reduce(&p).unwrap().is_zero());
    }

    #[test]
    fn idempotent() {
        let vars = vars_cs();
        let rules = rule_s2(&vars);
        let p = parse_expr("s^5 c + 3 s^2 - c", &vars, CoeffMode::Exact).unwrap();
        let once = rules.reduce(&p).unwrap();
        let twice = rules.reduce(&once).unwrap();
        assert_eq!(once, twice);
        assert!(once.degree_in(1) < 2);
    }

    #[test]
    fn reject_cyclic_rules() {
        let vars = vars_cs();
        let to_s = parse_expr("s", &vars, CoeffMode::Exact).unwrap();
        let to_c = parse_expr("c", &vars, CoeffMode::Exact).unwrap();
        let err = RuleSet::new(
            vec![
                Rule {
                    var: 0,
                    power: 2,
                    replacement: to_s,
                },
                Rule {
                    var: 1,
                    power: 2,
                    replacement: to_c,
                },
            ],
            &vars,
            CoeffMode::Exact,
        );
        assert!(err.is_err());
    }

    #[test]
    fn reject_non_lowering() {
        let vars = vars_cs();
        let repl = parse_expr("s^2", &vars, CoeffMode::Exact).unwrap();
        assert!(RuleSet::new(
            vec![Rule {
                var: 1,
                power: 2,
                replacement: repl,
            }],
            &vars,
            CoeffMode::Exact,
        )
        .is_err());
    }
}
