//! Canonical symbol tokens.
//!
//! Every symbol and type in the crate is a [`Term`]: either a bare name or a tagged
//! tuple of subterms. Composite signatures (⊗, ⊙, coproducts, pullbacks, webs)
//! build their symbols as tagged tuples, so equality is structural and the printed
//! form round-trips through [`Term::parse`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Atom(Arc<str>),
    App(Arc<str>, Arc<[Term]>),
}

/// Tags used by the constructions in this crate.
pub mod tag {
    pub const TENSOR: &str = "ot";
    pub const ODOT: &str = "od";
    pub const UNIT: &str = "one";
    pub const ODOT_UNIT: &str = "dot1";
    pub const INL: &str = "inl";
    pub const INR: &str = "inr";
    pub const PULLBACK: &str = "pb";
    pub const LABEL: &str = "lab";
    pub const WEB_UNIT: &str = "u";
    pub const WEB_NODE: &str = "n";
    pub const STAR: &str = "st";
    pub const SLICE: &str = "sl";
    pub const SLICE_UNIT: &str = "sl1";
}

impl Term {
    pub fn atom(name: impl AsRef<str>) -> Term {
        Term::Atom(Arc::from(name.as_ref()))
    }

    pub fn app(tag: &str, args: Vec<Term>) -> Term {
        Term::App(Arc::from(tag), Arc::from(args))
    }

    pub fn nat(n: usize) -> Term {
        Term::atom(n.to_string())
    }

    pub fn is_app(&self, tag: &str) -> bool {
        matches!(self, Term::App(t, _) if &**t == tag)
    }

    /// Arguments when `self` is an application of `tag`.
    pub fn args_of(&self, tag: &str) -> Option<&[Term]> {
        match self {
            Term::App(t, args) if &**t == tag => Some(args),
            _ => None,
        }
    }

    pub fn expect_app(&self, tag: &str) -> Result<&[Term]> {
        self.args_of(tag)
            .ok_or_else(|| Error::Structural(format!("expected a `{tag}` term, found {self}")))
    }

    pub fn as_nat(&self) -> Option<usize> {
        match self {
            Term::Atom(a) => a.parse().ok(),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Result<Term> {
        let mut p = Parser {
            s: s.as_bytes(),
            pos: 0,
            src: s,
        };
        let t = p.term()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(Error::Parse(format!(
                "trailing input at byte {} of {s:?}",
                p.pos
            )));
        }
        Ok(t)
    }
}

fn needs_quotes(name: &str) -> bool {
    name.is_empty()
        || name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | '"' | '\\'))
}

fn write_name(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if needs_quotes(name) {
        write!(f, "\"")?;
        for c in name.chars() {
            if c == '"' || c == '\\' {
                write!(f, "\\")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "\"")
    } else {
        write!(f, "{name}")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(a) => write_name(f, a),
            Term::App(t, args) => {
                write_name(f, t)?;
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<&str> for Term {
    fn from(s: &str) -> Term {
        Term::atom(s)
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Term, D::Error> {
        let s = String::deserialize(d)?;
        Term::parse(&s).map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn name(&mut self) -> Result<String> {
        self.skip_ws();
        if self.pos < self.s.len() && self.s[self.pos] == b'"' {
            self.pos += 1;
            let mut out = String::new();
            let rest = &self.src[self.pos..];
            let mut chars = rest.char_indices();
            while let Some((i, c)) = chars.next() {
                match c {
                    '"' => {
                        self.pos += i + 1;
                        return Ok(out);
                    }
                    '\\' => match chars.next() {
                        Some((_, e)) => out.push(e),
                        None => break,
                    },
                    _ => out.push(c),
                }
            }
            return Err(Error::Parse(format!(
                "unterminated quote in {:?}",
                self.src
            )));
        }
        let start = self.pos;
        while self.pos < self.s.len() {
            let c = self.s[self.pos];
            if c.is_ascii_whitespace() || matches!(c, b'(' | b')' | b',' | b'"' | b'\\') {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse(format!(
                "expected a name at byte {start} of {:?}",
                self.src
            )));
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn term(&mut self) -> Result<Term> {
        let name = self.name()?;
        self.skip_ws();
        if self.pos < self.s.len() && self.s[self.pos] == b'(' {
            self.pos += 1;
            let mut args = Vec::new();
            self.skip_ws();
            if self.pos < self.s.len() && self.s[self.pos] == b')' {
                self.pos += 1;
                return Ok(Term::app(&name, args));
            }
            loop {
                args.push(self.term()?);
                self.skip_ws();
                match self.s.get(self.pos) {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        return Ok(Term::app(&name, args));
                    }
                    _ => {
                        return Err(Error::Parse(format!(
                            "expected ',' or ')' at byte {} of {:?}",
                            self.pos, self.src
                        )))
                    }
                }
            }
        }
        Ok(Term::atom(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_nested() {
        let t = Term::app(
            tag::TENSOR,
            vec![
                Term::atom("b"),
                Term::app(tag::UNIT, vec![Term::atom("square")]),
                Term::app("x", vec![]),
            ],
        );
        let s = t.to_string();
        assert_eq!(s, "ot(b,one(square),x())");
        assert_eq!(Term::parse(&s).unwrap(), t);
    }

    #[test]
    fn quoted_names_round_trip() {
        let t = Term::app(
            "f",
            vec![Term::atom("a b"), Term::atom("q\"x"), Term::atom("")],
        );
        assert_eq!(Term::parse(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Term::parse("f(a,").is_err());
        assert!(Term::parse("f(a) b").is_err());
        assert!(Term::parse("").is_err());
    }

    #[test]
    fn atom_and_empty_app_differ() {
        assert_ne!(Term::parse("x").unwrap(), Term::parse("x()").unwrap());
    }
}
