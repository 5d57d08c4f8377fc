//! Recursive-descent parser for the formula concrete syntax.
//!
//! ```text
//! or      := and ('|' and)*
//! and     := binary ('&' binary)*
//! binary  := unary (('U' | 'S') interval unary)*
//! unary   := '!' unary | ('F' | 'G' | 'P' | 'H') interval unary | primary
//! primary := 'true' | 'false' | ident | '(' or ')'
//! interval:= '[' decimal ',' (decimal | 'inf') ')'
//! ```
//!
//! `F`, `G`, `P`, `H`, `U`, `S` are operators only when immediately followed
//! by `[`; otherwise they are ordinary identifiers.

use crate::error::{Error, Result};
use crate::logic::formula::Formula;
use crate::logic::predicate::PredicateMap;
use crate::time::{Bound, Interval, Time};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Op(char),
    Bang,
    Amp,
    Pipe,
    LParen,
    RParen,
    LBracket,
    Comma,
    Eof,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let t = lx.next()?;
            let done = t.0 == Tok::Eof;
            out.push(t);
            if done {
                return Ok(out);
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Result<(Tok, usize)> {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok((Tok::Eof, start));
        };
        let single = match c {
            '!' => Some(Tok::Bang),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Pipe),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                self.pos += 1;
            }
            let word = &self.src[start..self.pos];
            if matches!(word, "F" | "G" | "P" | "H" | "U" | "S") && self.peek() == Some('[') {
                return Ok((Tok::Op(word.chars().next().unwrap()), start));
            }
            return Ok((Tok::Ident(word.to_string()), start));
        }
        if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' {
            self.pos += 1;
            while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
                self.pos += 1;
            }
            return Ok((Tok::Number(self.src[start..self.pos].to_string()), start));
        }
        Err(Error::Syntax {
            pos: start,
            msg: format!("unexpected character `{c}`"),
        })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> usize {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if t != Tok::Eof {
            self.i += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, what: &str) -> Error {
        let found = match self.peek() {
            Tok::Eof => "end of input".to_string(),
            t => format!("{t:?}"),
        };
        Error::Syntax {
            pos: self.pos(),
            msg: format!("expected {what}, found {found}"),
        }
    }

    fn or(&mut self) -> Result<Formula> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut lhs = self.binary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            lhs = Formula::and(lhs, self.binary()?);
        }
        Ok(lhs)
    }

    fn binary(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while let Tok::Op(op @ ('U' | 'S')) = *self.peek() {
            self.bump();
            let i = self.interval()?;
            let rhs = self.unary()?;
            lhs = if op == 'U' {
                Formula::until(i, lhs, rhs)
            } else {
                Formula::since(i, lhs, rhs)
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Op(op @ ('F' | 'G' | 'P' | 'H')) => {
                self.bump();
                let i = self.interval()?;
                let f = self.unary()?;
                Ok(match op {
                    'F' => Formula::eventually(i, f),
                    'G' => Formula::always(i, f),
                    'P' => Formula::once(i, f),
                    _ => Formula::historically(i, f),
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(match name.as_str() {
                    "true" => Formula::True,
                    "false" => Formula::False,
                    _ => Formula::Atom(name),
                })
            }
            Tok::LParen => {
                self.bump();
                let f = self.or()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            _ => Err(self.unexpected("a formula")),
        }
    }

    fn interval(&mut self) -> Result<Interval> {
        let start = self.pos();
        self.expect(Tok::LBracket, "`[`")?;
        let lo = match self.bump() {
            Tok::Number(s) => s.parse::<Time>().map_err(|msg| Error::Interval { pos: start, msg })?,
            _ => {
                self.i -= 1;
                return Err(self.unexpected("interval lower bound"));
            }
        };
        self.expect(Tok::Comma, "`,`")?;
        let hi = match self.bump() {
            Tok::Number(s) => Bound::Finite(s.parse::<Time>().map_err(|msg| Error::Interval { pos: start, msg })?),
            Tok::Ident(s) if s == "inf" => Bound::Infinite,
            _ => {
                self.i -= 1;
                return Err(self.unexpected("interval upper bound"));
            }
        };
        self.expect(Tok::RParen, "`)` closing the interval")?;
        Interval::new(lo, hi).map_err(|e| match e {
            Error::Interval { msg, .. } => Error::Interval { pos: start, msg },
            other => other,
        })
    }
}

/// Parse without resolving atom names.
pub fn parse(text: &str) -> Result<Formula> {
    let mut p = Parser {
        toks: Lexer::tokens(text)?,
        i: 0,
    };
    let f = p.or()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(f)
}

/// Parse and check that every atom is defined in `pmap`.
pub fn parse_formula(text: &str, pmap: &PredicateMap) -> Result<Formula> {
    let f = parse(text)?;
    resolve(&f, pmap)?;
    Ok(f)
}

pub fn resolve(f: &Formula, pmap: &PredicateMap) -> Result<()> {
    match f.atoms().into_iter().find(|a| pmap.get(a).is_none()) {
        Some(a) => Err(Error::UnknownAtom(a.to_string())),
        None => Ok(()),
    }
}

impl std::str::FromStr for Formula {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::predicate::AtomicPredicate;

    fn iv(a: i64, b: i64) -> Interval {
        Interval::bounded(a, b).unwrap()
    }

    #[test]
    fn reach_avoid_spec() {
        let f = parse("F[0,10)(r1 & F[0,15) r2) & G[0,40) !obs").unwrap();
        let expected = Formula::and(
            Formula::eventually(
                iv(0, 10),
                Formula::and(Formula::atom("r1"), Formula::eventually(iv(0, 15), Formula::atom("r2"))),
            ),
            Formula::always(iv(0, 40), Formula::not(Formula::atom("obs"))),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn constants_and_once() {
        assert_eq!(parse("true").unwrap(), Formula::True);
        assert_eq!(parse("false").unwrap(), Formula::False);
        let f = parse("P[1,3) a").unwrap();
        assert_eq!(f, Formula::once(iv(1, 3), Formula::atom("a")));
        assert_eq!(parse(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn precedence() {
        let f = parse("!a & b | c").unwrap();
        assert_eq!(
            f,
            Formula::or(
                Formula::and(Formula::not(Formula::atom("a")), Formula::atom("b")),
                Formula::atom("c")
            )
        );
        let g = parse("a U[0,5) b & c").unwrap();
        assert_eq!(
            g,
            Formula::and(
                Formula::until(iv(0, 5), Formula::atom("a"), Formula::atom("b")),
                Formula::atom("c")
            )
        );
    }

    #[test]
    fn operator_letters_are_identifiers_without_bracket() {
        let f = parse("F & G[0,1) U").unwrap();
        assert_eq!(
            f,
            Formula::and(Formula::atom("F"), Formula::always(iv(0, 1), Formula::atom("U")))
        );
    }

    #[test]
    fn decimal_and_infinite_bounds() {
        let f = parse("G[0.5,inf) a").unwrap();
        assert_eq!(f.to_string(), "G[0.5,inf) a");
    }

    #[test]
    fn errors_carry_positions() {
        match parse("F[3,1) a") {
            Err(Error::Interval { pos, .. }) => assert_eq!(pos, 1),
            other => panic!("{other:?}"),
        }
        match parse("a & ") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        match parse("(a | b") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("a $ b"), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(parse("F[0,2 a"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn unknown_atoms_rejected() {
        let mut pm = PredicateMap::new(1);
        pm.insert(AtomicPredicate::halfspace("a", vec![1.0], 0.0).unwrap())
            .unwrap();
        assert!(parse_formula("F[0,1) a", &pm).is_ok());
        assert!(matches!(parse_formula("a & b", &pm), Err(Error::UnknownAtom(n)) if n == "b"));
    }
}
