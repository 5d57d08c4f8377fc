//! Direct transliteration of the recursive robust semantics, with no
//! memoization and windows found by scanning every index. Exponential in
//! nesting depth; intended for cross-checking [`eval_robust`] on small inputs.
//!
//! [`eval_robust`]: crate::logic::semantics::eval_robust

use crate::error::{Error, Result};
use crate::logic::formula::Formula;
use crate::logic::metric::Metric;
use crate::logic::predicate::PredicateMap;
use crate::logic::semantics::check_inputs;
use crate::trace::TimedTrace;

pub fn eval_robust_oracle(
    phi: &Formula,
    trace: &TimedTrace,
    k: usize,
    pmap: &PredicateMap,
    metric: &Metric,
) -> Result<f64> {
    check_inputs(phi, trace, pmap, metric)?;
    if k >= trace.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: trace.len(),
        });
    }
    let ctx = Ctx { trace, pmap, metric };
    ctx.rob(&phi.expand(), k)
}

struct Ctx<'a> {
    trace: &'a TimedTrace,
    pmap: &'a PredicateMap,
    metric: &'a Metric,
}

impl Ctx<'_> {
    fn rob(&self, phi: &Formula, k: usize) -> Result<f64> {
        let t = self.trace.times();
        let n = t.len();
        match phi {
            Formula::True => Ok(f64::INFINITY),
            Formula::False => Ok(f64::NEG_INFINITY),
            Formula::Atom(a) => self.pmap.lookup(a)?.signed_distance(self.trace.state(k), self.metric),
            Formula::Not(f) => Ok(-self.rob(f, k)?),
            Formula::And(a, b) => Ok(self.rob(a, k)?.min(self.rob(b, k)?)),
            Formula::Or(a, b) => Ok(self.rob(a, k)?.max(self.rob(b, k)?)),
            Formula::Until(i, a, b) => {
                let mut best = f64::NEG_INFINITY;
                for kp in 0..n {
                    if t[kp] < t[k] || !i.contains(t[kp] - t[k]) {
                        continue;
                    }
                    let mut inner = self.rob(b, kp)?;
                    for kpp in 0..n {
                        if t[k] <= t[kpp] && t[kpp] < t[kp] {
                            inner = inner.min(self.rob(a, kpp)?);
                        }
                    }
                    best = best.max(inner);
                }
                Ok(best)
            }
            Formula::Since(i, a, b) => {
                let mut best = f64::NEG_INFINITY;
                for kp in 0..n {
                    if t[kp] > t[k] || !i.contains(t[k] - t[kp]) {
                        continue;
                    }
                    let mut inner = self.rob(b, kp)?;
                    for kpp in 0..n {
                        if t[kp] <= t[kpp] && t[kpp] < t[k] {
                            inner = inner.min(self.rob(a, kpp)?);
                        }
                    }
                    best = best.max(inner);
                }
                Ok(best)
            }
            Formula::Eventually(..) | Formula::Always(..) | Formula::Once(..) | Formula::Historically(..) => {
                unreachable!("derived operators are expanded before evaluation")
            }
        }
    }
}
