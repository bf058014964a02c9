//! Model specifications such as `orm-logit(y ~ age + rcs(bmi,3) + log(artdur))`.
//!
//! ```text
//! spec    := fitter "(" outcome [ "~" rhs ] ")"
//! rhs     := "1" | term { "+" term }
//! term    := name | func "(" name [ "," int ] ")"
//! func    := "log" | "cat" | "rcs" | "poly"
//! ```

use std::fmt;

use crate::data::Term;
use crate::error::{invalid, Result};
use crate::fit::FitterSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub fitter: FitterSpec,
    pub outcome: String,
    pub terms: Vec<Term>,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn error(&self, what: &str) -> crate::error::Error {
        let rest = &self.src[self.pos..];
        let near = if rest.is_empty() { "end of input".to_string() } else { format!("`{rest}`") };
        invalid(format!("model spec `{}`: {what} at {near}", self.src))
    }

    fn word(&mut self, extra: &str) -> Result<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_alphanumeric() || c == '_' || c == '.' || extra.contains(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.error("expected a name"));
        }
        Ok(&self.src[start..self.pos])
    }

    fn term(&mut self) -> Result<Option<Term>> {
        let start = self.pos;
        let head = self.word("")?;
        if head == "1" {
            return Ok(None);
        }
        if self.eat('(') {
            self.word("")?;
            if self.eat(',') {
                self.word("")?;
            }
            self.expect(')')?;
        }
        Term::parse(&self.src[start..self.pos]).map(Some)
    }
}

impl ModelSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Parser { src: text, pos: 0 };
        let fitter = FitterSpec::parse(p.word("-")?)?;
        p.expect('(')?;
        let outcome = p.word("")?.to_string();
        let mut terms = Vec::new();
        if p.eat('~') {
            loop {
                if let Some(t) = p.term()? {
                    terms.push(t);
                }
                if !p.eat('+') {
                    break;
                }
            }
        }
        p.expect(')')?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Self { fitter, outcome, terms })
    }

    /// Outcome and covariate column names, for listwise deletion.
    pub fn columns(&self) -> Vec<&str> {
        let mut cols = vec![self.outcome.as_str()];
        for t in &self.terms {
            if !cols.contains(&t.column()) {
                cols.push(t.column());
            }
        }
        cols
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}", self.fitter, self.outcome)?;
        if !self.terms.is_empty() {
            let rhs: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
            write!(f, " ~ {}", rhs.join(" + "))?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::CumLink;

    #[test]
    fn full_spec() {
        let s = ModelSpec::parse("orm-logit(y ~ age + rcs(bmi,3) + log(artdur))").unwrap();
        assert_eq!(s.fitter, FitterSpec::Orm(CumLink::Logit));
        assert_eq!(s.outcome, "y");
        assert_eq!(
            s.terms,
            vec![
                Term::Linear("age".into()),
                Term::Rcs { column: "bmi".into(), knots: 3 },
                Term::Log("artdur".into())
            ]
        );
        assert_eq!(s.to_string(), "orm-logit(y ~ age + rcs(bmi,3) + log(artdur))");
        assert_eq!(s.columns(), vec!["y", "age", "bmi", "artdur"]);
        assert_eq!(ModelSpec::parse(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn intercept_only_forms() {
        for text in ["empirical(y)", "empirical( y ~ 1 )", "linear(y~1)"] {
            let s = ModelSpec::parse(text).unwrap();
            assert!(s.terms.is_empty(), "{text}");
        }
        let s = ModelSpec::parse("poisson(n ~ 1 + cat(site) + poly(age, 2))").unwrap();
        assert_eq!(s.terms.len(), 2);
    }

    #[test]
    fn errors_name_the_offending_token() {
        let e = ModelSpec::parse("orm-logit(y ~ age +)").unwrap_err().to_string();
        assert!(e.contains("`)`"), "{e}");
        let e = ModelSpec::parse("orm-logit(y ~ age) extra").unwrap_err().to_string();
        assert!(e.contains("extra"), "{e}");
        assert!(ModelSpec::parse("tobit(y)").unwrap_err().to_string().contains("tobit"));
        assert!(ModelSpec::parse("linear(y ~ spline(x))").is_err());
    }
}
