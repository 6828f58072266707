//! Polynomial document format and the inline expression mini-parser.
//!
//! The document form is shared by every CLI command:
//!
//! ```json
//! {"vars":["X","Y"], "terms":[{"c":"-1","e":[4,0]}, {"c":"1","e":[3,0]}, {"c":"-1","e":[0,2]}]}
//! ```
//!
//! Coefficient strings accept integers, decimals, and `"p/q"` rationals.

use serde::{Deserialize, Serialize};

use super::{CoeffMode, Monomial, PolyError, Polynomial, Scalar};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermDoc {
    pub c: String,
    pub e: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vars: Option<Vec<String>>,
    pub terms: Vec<TermDoc>,
}

impl Polynomial {
    /// Builds a polynomial from a document. When the document omits its
    /// own variable list, `context_vars` supplies it (set and ideal
    /// documents carry the list once at the top level).
    pub fn from_doc(
        doc: &PolynomialDoc,
        context_vars: Option<&[String]>,
        mode: CoeffMode,
    ) -> Result<Polynomial, PolyError> {
        let vars: Vec<String> = match (&doc.vars, context_vars) {
            (Some(v), Some(ctx)) => {
                if v != ctx {
                    return Err(PolyError::BadDocument(format!(
                        "variable list {:?} does not match context {:?}",
                        v, ctx
                    )));
                }
                v.clone()
            }
            (Some(v), None) => v.clone(),
            (None, Some(ctx)) => ctx.to_vec(),
            (None, None) => {
                return Err(PolyError::BadDocument(
                    "document has no variable list and no context supplies one".into(),
                ))
            }
        };
        if vars.is_empty() {
            return Err(PolyError::BadDocument("empty variable list".into()));
        }
        let mut p = Polynomial::zero(vars, mode);
        for t in &doc.terms {
            if t.e.len() != p.arity() {
                return Err(PolyError::ArityMismatch {
                    expected: p.arity(),
                    got: t.e.len(),
                });
            }
            let mut exps = Vec::with_capacity(t.e.len());
            for &e in &t.e {
                if e < 0 {
                    return Err(PolyError::NegativeExponent(e));
                }
                exps.push(e as u32);
            }
            p.add_term(Monomial(exps), Scalar::parse(&t.c, mode)?);
        }
        Ok(p)
    }

    pub fn to_doc(&self, include_vars: bool) -> PolynomialDoc {
        PolynomialDoc {
            vars: include_vars.then(|| self.vars().to_vec()),
            terms: self
                .terms()
                .map(|(m, c)| TermDoc {
                    c: c.to_string(),
                    e: m.0.iter().map(|&e| e as i64).collect(),
                })
                .collect(),
        }
    }
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_doc(true).serialize(serializer)
    }
}

impl Serialize for Monomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

/// Parses a small inline expression over the declared variables,
/// supporting `+ - * ^`, parentheses, implicit multiplication
/// (`3X`, `2X^3Y`), and integer / decimal / `p/q` coefficients.
pub fn parse_expr(src: &str, vars: &[String], mode: CoeffMode) -> Result<Polynomial, PolyError> {
    let tokens = lex(src, vars)?;
    let mut parser = ExprParser {
        tokens,
        pos: 0,
        vars: vars.to_vec(),
        mode,
    };
    let p = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(PolyError::BadExpression(format!(
            "unexpected trailing input near token {}",
            parser.pos
        )));
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str, vars: &[String]) -> Result<Vec<Tok>, PolyError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                toks.push(Tok::Star);
                i += 1;
            }
            '^' => {
                toks.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // allow a rational "p/q" when a digit follows the slash
                if i < chars.len()
                    && chars[i] == '/'
                    && i + 1 < chars.len()
                    && chars[i + 1].is_ascii_digit()
                {
                    i += 2;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                toks.push(Tok::Num(chars[start..i].iter().collect()));
            }
            c if c.is_alphabetic() || c == '_' => {
                // longest declared-variable match wins
                let rest: String = chars[i..].iter().collect();
                let mut best: Option<(usize, usize)> = None;
                for (idx, v) in vars.iter().enumerate() {
                    if rest.starts_with(v.as_str())
                        && best.map_or(true, |(_, len)| v.len() > len)
                    {
                        best = Some((idx, v.len()));
                    }
                }
                match best {
                    Some((idx, len)) => {
                        toks.push(Tok::Var(idx));
                        i += len;
                    }
                    None => {
                        return Err(PolyError::BadExpression(format!(
                            "unknown variable starting at `{}`",
                            &rest[..rest.len().min(8)]
                        )))
                    }
                }
            }
            other => {
                return Err(PolyError::BadExpression(format!(
                    "unexpected character `{other}`"
                )))
            }
        }
    }
    Ok(toks)
}

struct ExprParser {
    tokens: Vec<Tok>,
    pos: usize,
    vars: Vec<String>,
    mode: CoeffMode,
}

impl ExprParser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let mut negate = false;
        match self.peek() {
            Some(Tok::Minus) => {
                negate = true;
                self.pos += 1;
            }
            Some(Tok::Plus) => {
                self.pos += 1;
            }
            _ => {}
        }
        let mut acc = self.term()?;
        if negate {
            acc = acc.neg();
        }
        while let Some(tok) = self.peek() {
            match tok {
                Tok::Plus => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.add(&t)?;
                }
                Tok::Minus => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.sub(&t)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let f = self.factor()?;
                    acc = acc.mul(&f)?;
                }
                // implicit multiplication: `3X`, `X(Y+1)`, `X Y`
                Some(Tok::Num(_)) | Some(Tok::Var(_)) | Some(Tok::LParen) => {
                    let f = self.factor()?;
                    acc = acc.mul(&f)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial, PolyError> {
        let base = match self.peek().cloned() {
            Some(Tok::Num(text)) => {
                self.pos += 1;
                Polynomial::constant(self.vars.clone(), Scalar::parse(&text, self.mode)?)
            }
            Some(Tok::Var(idx)) => {
                self.pos += 1;
                Polynomial::variable(self.vars.clone(), self.mode, idx)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => self.pos += 1,
                    _ => return Err(PolyError::BadExpression("missing `)`".into())),
                }
                inner
            }
            other => {
                return Err(PolyError::BadExpression(format!(
                    "expected a factor, found {other:?}"
                )))
            }
        };
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            match self.peek().cloned() {
                Some(Tok::Num(text)) => {
                    self.pos += 1;
                    let e: u32 = text.parse().map_err(|_| {
                        PolyError::BadExpression(format!("bad exponent `{text}`"))
                    })?;
                    return Ok(base.pow(e));
                }
                other => {
                    return Err(PolyError::BadExpression(format!(
                        "expected integer exponent, found {other:?}"
                    )))
                }
            }
        }
        Ok(base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Vec<String> {
        vec!["X".into(), "Y".into()]
    }

    #[test]
    fn doc_round_trip() {
        let json = r#"{"vars":["X","Y"],
            "terms":[{"c":"-1","e":[4,0]},{"c":"1","e":[3,0]},{"c":"-1","e":[0,2]}]}"#;
        let doc: PolynomialDoc = serde_json::from_str(json).unwrap();
        let p = Polynomial::from_doc(&doc, None, CoeffMode::Exact).unwrap();
        assert_eq!(p.num_terms(), 3);
        assert_eq!(p.degree(), 4);
        let doc2 = p.to_doc(true);
        let p2 = Polynomial::from_doc(&doc2, None, CoeffMode::Exact).unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn empty_terms_is_zero() {
        let doc: PolynomialDoc = serde_json::from_str(r#"{"vars":["X","Y"],"terms":[]}"#).unwrap();
        let p = Polynomial::from_doc(&doc, None, CoeffMode::Exact).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.degree(), -1);
    }

    #[test]
    fn negative_exponent_rejected() {
        let doc: PolynomialDoc =
            serde_json::from_str(r#"{"vars":["X","Y"],"terms":[{"c":"1","e":[-1,0]}]}"#).unwrap();
        assert!(matches!(
            Polynomial::from_doc(&doc, None, CoeffMode::Exact),
            Err(PolyError::NegativeExponent(-1))
        ));
    }

    #[test]
    fn expressions() {
        let p = parse_expr("Y - 3X + 2", &xy(), CoeffMode::Exact).unwrap();
        assert_eq!(p.to_string(), "Y - 3*X + 2");
        let q = parse_expr("(X-1)^2(X+1)", &xy(), CoeffMode::Exact).unwrap();
        assert_eq!(
            q,
            parse_expr("X^3 - X^2 - X + 1", &xy(), CoeffMode::Exact).unwrap()
        );
        let r = parse_expr("1/2 X Y^2 - 0.25", &xy(), CoeffMode::Exact).unwrap();
        assert_eq!(r.to_string(), "1/2*X*Y^2 - 1/4");
        assert!(parse_expr("Z + 1", &xy(), CoeffMode::Exact).is_err());
        assert!(parse_expr("X +", &xy(), CoeffMode::Exact).is_err());
    }
}
