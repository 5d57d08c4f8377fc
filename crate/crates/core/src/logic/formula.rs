use std::collections::BTreeSet;
use std::fmt;

use crate::time::Interval;

/// MTL formula over named atomic predicates.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
    Since(Interval, Box<Formula>, Box<Formula>),
    Eventually(Interval, Box<Formula>),
    Always(Interval, Box<Formula>),
    /// Eventually in the past.
    Once(Interval, Box<Formula>),
    /// Always in the past.
    Historically(Interval, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Formula {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn until(i: Interval, a: Formula, b: Formula) -> Formula {
        Formula::Until(i, Box::new(a), Box::new(b))
    }

    pub fn since(i: Interval, a: Formula, b: Formula) -> Formula {
        Formula::Since(i, Box::new(a), Box::new(b))
    }

    pub fn eventually(i: Interval, f: Formula) -> Formula {
        Formula::Eventually(i, Box::new(f))
    }

    pub fn always(i: Interval, f: Formula) -> Formula {
        Formula::Always(i, Box::new(f))
    }

    pub fn once(i: Interval, f: Formula) -> Formula {
        Formula::Once(i, Box::new(f))
    }

    pub fn historically(i: Interval, f: Formula) -> Formula {
        Formula::Historically(i, Box::new(f))
    }

    /// Left-nested conjunction; `true` for an empty list.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Formula {
        parts.into_iter().reduce(Formula::and).unwrap_or(Formula::True)
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => vec![],
            Formula::Not(f)
            | Formula::Eventually(_, f)
            | Formula::Always(_, f)
            | Formula::Once(_, f)
            | Formula::Historically(_, f) => vec![f],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) | Formula::Since(_, a, b) => {
                vec![a, b]
            }
        }
    }

    pub fn atoms(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        if let Formula::Atom(n) = self {
            out.insert(n);
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn temporal_count(&self) -> usize {
        let own = usize::from(self.is_temporal());
        own + self.children().iter().map(|c| c.temporal_count()).sum::<usize>()
    }

    pub fn is_temporal(&self) -> bool {
        matches!(
            self,
            Formula::Until(..)
                | Formula::Since(..)
                | Formula::Eventually(..)
                | Formula::Always(..)
                | Formula::Once(..)
                | Formula::Historically(..)
        )
    }

    pub fn has_future(&self) -> bool {
        matches!(self, Formula::Until(..) | Formula::Eventually(..) | Formula::Always(..))
            || self.children().iter().any(|c| c.has_future())
    }

    pub fn has_past(&self) -> bool {
        matches!(self, Formula::Since(..) | Formula::Once(..) | Formula::Historically(..))
            || self.children().iter().any(|c| c.has_past())
    }

    /// Rewrite the derived temporal operators into `Until`/`Since`:
    /// `F_I f = true U_I f`, `G_I f = !F_I !f`, and the past duals.
    pub fn expand(&self) -> Formula {
        let b = |f: &Formula| Box::new(f.expand());
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => self.clone(),
            Formula::Not(f) => Formula::Not(b(f)),
            Formula::And(x, y) => Formula::And(b(x), b(y)),
            Formula::Or(x, y) => Formula::Or(b(x), b(y)),
            Formula::Until(i, x, y) => Formula::Until(*i, b(x), b(y)),
            Formula::Since(i, x, y) => Formula::Since(*i, b(x), b(y)),
            Formula::Eventually(i, f) => Formula::until(*i, Formula::True, f.expand()),
            Formula::Always(i, f) => Formula::not(Formula::until(*i, Formula::True, Formula::not(f.expand()))),
            Formula::Once(i, f) => Formula::since(*i, Formula::True, f.expand()),
            Formula::Historically(i, f) => Formula::not(Formula::since(*i, Formula::True, Formula::not(f.expand()))),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Until(..) | Formula::Since(..) => 3,
            Formula::Not(_)
            | Formula::Eventually(..)
            | Formula::Always(..)
            | Formula::Once(..)
            | Formula::Historically(..) => 4,
            Formula::True | Formula::False | Formula::Atom(_) => 5,
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, child: &Formula, min_prec: u8) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Formula {
    /// Emits the same concrete syntax the parser reads.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(n) => f.write_str(n),
            Formula::Not(x) => {
                f.write_str("!")?;
                write_operand(f, x, 4)
            }
            Formula::And(x, y) => {
                write_operand(f, x, 2)?;
                f.write_str(" & ")?;
                write_operand(f, y, 3)
            }
            Formula::Or(x, y) => {
                write_operand(f, x, 1)?;
                f.write_str(" | ")?;
                write_operand(f, y, 2)
            }
            Formula::Until(i, x, y) | Formula::Since(i, x, y) => {
                let op = if matches!(self, Formula::Until(..)) { 'U' } else { 'S' };
                write_operand(f, x, 3)?;
                write!(f, " {op}{i} ")?;
                write_operand(f, y, 4)
            }
            Formula::Eventually(i, x) | Formula::Always(i, x) | Formula::Once(i, x) | Formula::Historically(i, x) => {
                let op = match self {
                    Formula::Eventually(..) => 'F',
                    Formula::Always(..) => 'G',
                    Formula::Once(..) => 'P',
                    _ => 'H',
                };
                write!(f, "{op}{i} ")?;
                write_operand(f, x, 4)
            }
        }
    }
}
