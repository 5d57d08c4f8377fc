use std::collections::BTreeMap;
use std::fmt;

use crate::time::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl ClockOp {
    pub fn holds(self, c: Time, g: Time) -> bool {
        match self {
            ClockOp::Lt => c < g,
            ClockOp::Le => c <= g,
            ClockOp::Gt => c > g,
            ClockOp::Ge => c >= g,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            ClockOp::Lt => "<",
            ClockOp::Le => "<=",
            ClockOp::Gt => ">",
            ClockOp::Ge => ">=",
        }
    }
}

/// `gamma := true | false | gamma | gamma | gamma & gamma | l | c ~ g | c.gamma`
#[derive(Debug, Clone, PartialEq)]
pub enum TransitionFormula {
    True,
    False,
    Or(Box<TransitionFormula>, Box<TransitionFormula>),
    And(Box<TransitionFormula>, Box<TransitionFormula>),
    Location(usize),
    Clock(ClockOp, Time),
    /// Reset the clock, then continue with the inner formula.
    Reset(Box<TransitionFormula>),
}

impl TransitionFormula {
    pub fn and(a: TransitionFormula, b: TransitionFormula) -> TransitionFormula {
        match (a, b) {
            (TransitionFormula::True, x) | (x, TransitionFormula::True) => x,
            (TransitionFormula::False, _) | (_, TransitionFormula::False) => TransitionFormula::False,
            (a, b) => TransitionFormula::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn or(a: TransitionFormula, b: TransitionFormula) -> TransitionFormula {
        match (a, b) {
            (TransitionFormula::False, x) | (x, TransitionFormula::False) => x,
            (TransitionFormula::True, _) | (_, TransitionFormula::True) => TransitionFormula::True,
            (a, b) => TransitionFormula::Or(Box::new(a), Box::new(b)),
        }
    }

    pub fn reset(f: TransitionFormula) -> TransitionFormula {
        TransitionFormula::Reset(Box::new(f))
    }

    /// Minimal models as sets of `(location, reset)` pairs for clock value
    /// `c`. `reset` tells whether the clock is reset on entering the location.
    pub fn models(&self, c: Time) -> Vec<Vec<(usize, bool)>> {
        self.models_inner(c, false)
    }

    fn models_inner(&self, c: Time, reset: bool) -> Vec<Vec<(usize, bool)>> {
        match self {
            TransitionFormula::True => vec![vec![]],
            TransitionFormula::False => vec![],
            TransitionFormula::Location(l) => vec![vec![(*l, reset)]],
            TransitionFormula::Clock(op, g) => {
                if op.holds(c, *g) {
                    vec![vec![]]
                } else {
                    vec![]
                }
            }
            TransitionFormula::Reset(f) => f.models_inner(c, true),
            TransitionFormula::Or(a, b) => {
                let mut out = a.models_inner(c, reset);
                out.extend(b.models_inner(c, reset));
                out
            }
            TransitionFormula::And(a, b) => {
                let left = a.models_inner(c, reset);
                let right = b.models_inner(c, reset);
                let mut out = Vec::new();
                for l in &left {
                    for r in &right {
                        let mut m = l.clone();
                        m.extend(r.iter().copied());
                        m.sort_unstable();
                        m.dedup();
                        out.push(m);
                    }
                }
                out
            }
        }
    }

    fn fmt_with(&self, names: &[String], f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        let prec = match self {
            TransitionFormula::Or(..) => 1,
            TransitionFormula::And(..) => 2,
            _ => 3,
        };
        let paren = prec < parent;
        if paren {
            f.write_str("(")?;
        }
        match self {
            TransitionFormula::True => f.write_str("true")?,
            TransitionFormula::False => f.write_str("false")?,
            TransitionFormula::Location(l) => f.write_str(&names[*l])?,
            TransitionFormula::Clock(op, g) => write!(f, "c {} {}", op.symbol(), g)?,
            TransitionFormula::Reset(inner) => {
                f.write_str("c.")?;
                inner.fmt_with(names, f, 3)?;
            }
            TransitionFormula::Or(a, b) => {
                a.fmt_with(names, f, 1)?;
                f.write_str(" | ")?;
                b.fmt_with(names, f, 2)?;
            }
            TransitionFormula::And(a, b) => {
                a.fmt_with(names, f, 2)?;
                f.write_str(" & ")?;
                b.fmt_with(names, f, 3)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Key of a transition entry: a proposition, or `None` for letters in which
/// none of the location's listed propositions hold.
pub type Letter = Option<String>;

#[derive(Debug, Clone, PartialEq)]
pub struct Ocata {
    pub propositions: Vec<String>,
    pub locations: Vec<String>,
    pub initial: usize,
    /// Configuration the run starts from (the initial location, plus any
    /// monitor locations started alongside it).
    pub initial_configuration: TransitionFormula,
    pub accepting: Vec<usize>,
    pub transitions: BTreeMap<(usize, Letter), TransitionFormula>,
}

impl Ocata {
    pub fn location_count(&self) -> usize {
        self.locations.len()
    }

    pub fn location_id(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l == name)
    }

    /// Successor formula of `loc` on a letter given by the set of
    /// propositions that hold: the conjunction of the entries for those
    /// propositions, or the `*` entry if none is listed.
    pub fn successor(&self, loc: usize, letter: &[&str]) -> TransitionFormula {
        let mut hit = false;
        let mut out = TransitionFormula::True;
        for p in letter {
            if let Some(f) = self.transitions.get(&(loc, Some((*p).to_string()))) {
                hit = true;
                out = TransitionFormula::and(out, f.clone());
            }
        }
        if hit {
            out
        } else {
            self.transitions
                .get(&(loc, None))
                .cloned()
                .unwrap_or(TransitionFormula::False)
        }
    }

    pub fn render(&self, f: &TransitionFormula) -> String {
        struct R<'a>(&'a TransitionFormula, &'a [String]);
        impl fmt::Display for R<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt_with(self.1, f, 0)
            }
        }
        R(f, &self.locations).to_string()
    }

    /// Structured text listing of the automaton.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str("# one-clock alternating timed automaton\n");
        out.push_str("# letters are sets of propositions; a location reads the conjunction of its\n");
        out.push_str("# entries for the propositions that hold, or its `*` entry when none does;\n");
        out.push_str("# a location entered through c.(...) reads the current letter as well\n");
        out.push_str(&format!("propositions: {}\n", self.propositions.join(", ")));
        out.push_str(&format!("locations: {}\n", self.locations.join(", ")));
        out.push_str(&format!("initial: {}\n", self.locations[self.initial]));
        out.push_str(&format!(
            "initial_configuration: {}\n",
            self.render(&self.initial_configuration)
        ));
        let acc: Vec<&str> = self.accepting.iter().map(|l| self.locations[*l].as_str()).collect();
        out.push_str(&format!("accepting: {}\n", acc.join(", ")));
        for ((loc, letter), f) in &self.transitions {
            let letter = letter.as_deref().unwrap_or("*");
            out.push_str(&format!(
                "delta({}, {}) = {}\n",
                self.locations[*loc],
                letter,
                self.render(f)
            ));
        }
        out
    }
}
