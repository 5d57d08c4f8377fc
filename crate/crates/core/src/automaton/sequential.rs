use std::collections::BTreeMap;

use super::ocata::{ClockOp, Ocata, TransitionFormula};
use crate::error::{Error, Result};
use crate::logic::Formula;
use crate::time::{Bound, Interval};

/// `F_{I1}(p1 & F_{I2}(p2 & ... F_{In} pn)) & G_{J1} !a1 & ... & G_{Jm} !am`
#[derive(Debug, Clone, PartialEq)]
pub struct SequentialSpec {
    /// Reach steps `(p_j, I_j)` in order.
    pub chain: Vec<(String, Interval)>,
    /// Avoid constraints `(a, J)`.
    pub safety: Vec<(String, Interval)>,
}

impl SequentialSpec {
    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    /// Reach locations `l0..ln`; the final one is accepting.
    pub fn final_location(&self) -> usize {
        self.chain.len()
    }

    pub fn to_formula(&self) -> Formula {
        let mut reach: Option<Formula> = None;
        for (p, i) in self.chain.iter().rev() {
            let body = match reach {
                None => Formula::atom(p.clone()),
                Some(inner) => Formula::and(Formula::atom(p.clone()), inner),
            };
            reach = Some(Formula::eventually(*i, body));
        }
        let mut parts: Vec<Formula> = reach.into_iter().collect();
        for (a, j) in &self.safety {
            parts.push(Formula::always(*j, Formula::not(Formula::atom(a.clone()))));
        }
        Formula::conjunction(parts)
    }
}

fn flatten_and<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    match f {
        Formula::And(a, b) => {
            flatten_and(a, out);
            flatten_and(b, out);
        }
        other => out.push(other),
    }
}

fn outside(f: &Formula, why: &str) -> Error {
    Error::OutsideFragment(format!("`{f}`: {why}"))
}

fn parse_chain(f: &Formula, chain: &mut Vec<(String, Interval)>) -> Result<()> {
    let Formula::Eventually(i, body) = f else {
        return Err(outside(f, "expected an eventually operator"));
    };
    match body.as_ref() {
        Formula::Atom(p) => {
            chain.push((p.clone(), *i));
            Ok(())
        }
        Formula::And(a, b) => match (a.as_ref(), b.as_ref()) {
            (Formula::Atom(p), rest @ Formula::Eventually(..)) | (rest @ Formula::Eventually(..), Formula::Atom(p)) => {
                chain.push((p.clone(), *i));
                parse_chain(rest, chain)
            }
            _ => Err(outside(body, "expected `p & F[a,b) ...`")),
        },
        other => Err(outside(other, "expected an atom or `p & F[a,b) ...`")),
    }
}

/// Recognise the sequential reach-avoid fragment.
pub fn parse_sequential(phi: &Formula) -> Result<SequentialSpec> {
    let mut parts = Vec::new();
    flatten_and(phi, &mut parts);
    let mut chain = None;
    let mut safety = Vec::new();
    for part in parts {
        match part {
            Formula::Always(j, inner) => match inner.as_ref() {
                Formula::Not(a) => match a.as_ref() {
                    Formula::Atom(name) => safety.push((name.clone(), *j)),
                    other => return Err(outside(other, "safety constraints must negate a single atom")),
                },
                other => return Err(outside(other, "safety constraints must have the form G[a,b) !p")),
            },
            Formula::Eventually(..) => {
                if chain.is_some() {
                    return Err(outside(part, "more than one reach chain"));
                }
                let mut c = Vec::new();
                parse_chain(part, &mut c)?;
                chain = Some(c);
            }
            other => {
                return Err(outside(
                    other,
                    "conjunct is neither a reach chain nor a safety constraint",
                ))
            }
        }
    }
    let chain = chain.ok_or_else(|| outside(phi, "no reach chain"))?;
    Ok(SequentialSpec { chain, safety })
}

fn clock_in(i: &Interval) -> TransitionFormula {
    let lo = if i.lo().is_zero() {
        TransitionFormula::True
    } else {
        TransitionFormula::Clock(ClockOp::Ge, i.lo())
    };
    TransitionFormula::and(lo, clock_before_end(i))
}

fn clock_before_end(i: &Interval) -> TransitionFormula {
    match i.hi() {
        Bound::Finite(h) => TransitionFormula::Clock(ClockOp::Lt, h),
        Bound::Infinite => TransitionFormula::True,
    }
}

fn clock_outside(i: &Interval) -> TransitionFormula {
    let before = if i.lo().is_zero() {
        TransitionFormula::False
    } else {
        TransitionFormula::Clock(ClockOp::Lt, i.lo())
    };
    let after = match i.hi() {
        Bound::Finite(h) => TransitionFormula::Clock(ClockOp::Ge, h),
        Bound::Infinite => TransitionFormula::False,
    };
    TransitionFormula::or(before, after)
}

/// Reach locations `l0..ln` followed by one safety monitor per avoid
/// constraint.
pub fn build_ocata(spec: &SequentialSpec) -> Ocata {
    let n = spec.chain.len();
    let mut locations: Vec<String> = (0..=n).map(|j| format!("l{j}")).collect();
    let safety_ids: Vec<usize> = (0..spec.safety.len()).map(|s| n + 1 + s).collect();
    for (s, _) in spec.safety.iter().enumerate() {
        locations.push(if spec.safety.len() == 1 {
            "lsafe".into()
        } else {
            format!("lsafe{s}")
        });
    }

    let mut propositions: Vec<String> = Vec::new();
    for (p, _) in spec.chain.iter().chain(spec.safety.iter()) {
        if !propositions.contains(p) {
            propositions.push(p.clone());
        }
    }

    let mut transitions = BTreeMap::new();
    for (j, (p, i)) in spec.chain.iter().enumerate() {
        let stay = TransitionFormula::and(clock_before_end(i), TransitionFormula::Location(j));
        let advance = TransitionFormula::and(
            clock_in(i),
            TransitionFormula::reset(TransitionFormula::Location(j + 1)),
        );
        transitions.insert((j, Some(p.clone())), TransitionFormula::or(advance, stay.clone()));
        transitions.insert((j, None), stay);
    }
    transitions.insert((n, None), TransitionFormula::True);
    for ((a, j), id) in spec.safety.iter().zip(&safety_ids) {
        transitions.insert(
            (*id, Some(a.clone())),
            TransitionFormula::and(clock_outside(j), TransitionFormula::Location(*id)),
        );
        transitions.insert((*id, None), TransitionFormula::Location(*id));
    }

    let mut initial_configuration = TransitionFormula::Location(0);
    for id in &safety_ids {
        initial_configuration = TransitionFormula::and(initial_configuration, TransitionFormula::Location(*id));
    }
    let mut accepting = vec![n];
    accepting.extend(&safety_ids);

    Ocata {
        propositions,
        locations,
        initial: 0,
        initial_configuration,
        accepting,
        transitions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse;
    use crate::time::Time;

    #[test]
    fn recognises_reach_avoid_shape() {
        let phi = parse("F[0,10)(r1 & F[0,15) r2) & G[0,40) !obs").unwrap();
        let s = parse_sequential(&phi).unwrap();
        assert_eq!(s.chain.len(), 2);
        assert_eq!(s.chain[0].0, "r1");
        assert_eq!(s.chain[1].1, Interval::bounded(0, 15).unwrap());
        assert_eq!(s.safety, vec![("obs".to_string(), Interval::bounded(0, 40).unwrap())]);
        assert_eq!(s.to_formula(), phi);
    }

    #[test]
    fn rejects_outside_fragment() {
        for text in [
            "F[0,5)(a | b)",
            "G[0,5) a",
            "F[0,5) a & F[0,3) b",
            "G[0,4) !(a & b)",
            "a & G[0,3) !b",
        ] {
            let phi = parse(text).unwrap();
            assert!(
                matches!(parse_sequential(&phi), Err(Error::OutsideFragment(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn automaton_shape() {
        let phi = parse("F[0,10)(r1 & F[0,15) r2) & G[0,40) !obs").unwrap();
        let a = build_ocata(&parse_sequential(&phi).unwrap());
        assert_eq!(a.locations, vec!["l0", "l1", "l2", "lsafe"]);
        assert_eq!(a.accepting, vec![2, 3]);
        assert_eq!(
            a.render(&a.transitions[&(0, Some("r1".into()))]),
            "c < 10 & c.l1 | c < 10 & l0"
        );
        assert_eq!(a.render(&a.transitions[&(3, Some("obs".into()))]), "c >= 40 & lsafe");
        let dump = a.dump();
        assert!(dump.contains("initial_configuration: l0 & lsafe"));
        assert!(dump.contains("delta(l2, *) = true"));
    }

    #[test]
    fn successor_models() {
        let phi = parse("F[2,5) p").unwrap();
        let a = build_ocata(&parse_sequential(&phi).unwrap());
        let succ = a.successor(0, &["p"]);
        assert_eq!(succ.models(Time::from_integer(1)), vec![vec![(0, false)]]);
        assert_eq!(
            succ.models(Time::from_integer(3)),
            vec![vec![(1, true)], vec![(0, false)]]
        );
        assert!(succ.models(Time::from_integer(5)).is_empty());
        assert_eq!(
            a.successor(0, &[]).models(Time::from_integer(4)),
            vec![vec![(0, false)]]
        );
    }
}
