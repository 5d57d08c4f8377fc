//! Boolean and robust (quantitative) semantics over finite timed traces.
//!
//! Every subformula is evaluated once over all indices, so the cost is
//! `O(|phi| * n * window)`. Windows that reach past either end of the trace
//! quantify over the available samples only: an empty existential window is
//! false / `-inf`, an empty universal window is true / `+inf`.

use crate::error::{Error, Result};
use crate::logic::formula::Formula;
use crate::logic::metric::Metric;
use crate::logic::predicate::PredicateMap;
use crate::time::{Interval, Time};
use crate::trace::TimedTrace;

/// Indices `k' >= k` with `t(k') - t(k)` in `i`, in increasing order.
pub(crate) fn future_window<'a>(times: &'a [Time], k: usize, i: &Interval) -> impl Iterator<Item = usize> + 'a {
    let t0 = times[k];
    let i = *i;
    (k..times.len())
        .take_while(move |&j| !i.is_past(times[j] - t0))
        .filter(move |&j| i.contains(times[j] - t0))
}

/// Indices `k' <= k` with `t(k) - t(k')` in `i`, in decreasing order.
pub(crate) fn past_window<'a>(times: &'a [Time], k: usize, i: &Interval) -> impl Iterator<Item = usize> + 'a {
    let t0 = times[k];
    let i = *i;
    (0..=k)
        .rev()
        .take_while(move |&j| !i.is_past(t0 - times[j]))
        .filter(move |&j| i.contains(t0 - times[j]))
}

pub(crate) fn check_inputs(phi: &Formula, trace: &TimedTrace, pmap: &PredicateMap, metric: &Metric) -> Result<()> {
    if trace.dim() != pmap.dim() {
        return Err(Error::Dimension {
            expected: pmap.dim(),
            got: trace.dim(),
        });
    }
    metric.check_dim(trace.dim())?;
    for a in phi.atoms() {
        pmap.lookup(a)?.validate_against(metric)?;
    }
    Ok(())
}

fn check_index(trace: &TimedTrace, k: usize) -> Result<()> {
    if k >= trace.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: trace.len(),
        });
    }
    Ok(())
}

/// Robustness `[[phi]](x, k)` for every index `k`.
pub fn robust_series(phi: &Formula, trace: &TimedTrace, pmap: &PredicateMap, metric: &Metric) -> Result<Vec<f64>> {
    check_inputs(phi, trace, pmap, metric)?;
    robust(phi, trace, pmap, metric)
}

pub fn eval_robust(phi: &Formula, trace: &TimedTrace, k: usize, pmap: &PredicateMap, metric: &Metric) -> Result<f64> {
    check_index(trace, k)?;
    Ok(robust_series(phi, trace, pmap, metric)?[k])
}

/// Satisfaction `<<phi>>(x, k)` for every index `k`.
pub fn boolean_series(phi: &Formula, trace: &TimedTrace, pmap: &PredicateMap, metric: &Metric) -> Result<Vec<bool>> {
    check_inputs(phi, trace, pmap, metric)?;
    boolean(phi, trace, pmap)
}

pub fn eval_boolean(phi: &Formula, trace: &TimedTrace, k: usize, pmap: &PredicateMap, metric: &Metric) -> Result<bool> {
    check_index(trace, k)?;
    Ok(boolean_series(phi, trace, pmap, metric)?[k])
}

fn robust(phi: &Formula, trace: &TimedTrace, pmap: &PredicateMap, metric: &Metric) -> Result<Vec<f64>> {
    let n = trace.len();
    let times = trace.times();
    let rec = |f: &Formula| robust(f, trace, pmap, metric);
    Ok(match phi {
        Formula::True => vec![f64::INFINITY; n],
        Formula::False => vec![f64::NEG_INFINITY; n],
        Formula::Atom(name) => {
            let p = pmap.lookup(name)?;
            trace
                .states()
                .iter()
                .map(|s| p.signed_distance(s, metric))
                .collect::<Result<_>>()?
        }
        Formula::Not(f) => rec(f)?.into_iter().map(|v| -v).collect(),
        Formula::And(a, b) => zip_with(rec(a)?, rec(b)?, f64::min),
        Formula::Or(a, b) => zip_with(rec(a)?, rec(b)?, f64::max),
        Formula::Until(i, a, b) => {
            let (ra, rb) = (rec(a)?, rec(b)?);
            (0..n)
                .map(|k| {
                    let t0 = times[k];
                    let mut best = f64::NEG_INFINITY;
                    let mut run = f64::INFINITY;
                    for j in k..n {
                        let d = times[j] - t0;
                        if i.is_past(d) {
                            break;
                        }
                        if i.contains(d) {
                            best = best.max(rb[j].min(run));
                        }
                        run = run.min(ra[j]);
                    }
                    best
                })
                .collect()
        }
        Formula::Since(i, a, b) => {
            let (ra, rb) = (rec(a)?, rec(b)?);
            (0..n)
                .map(|k| {
                    let t0 = times[k];
                    let mut best = f64::NEG_INFINITY;
                    let mut run = f64::INFINITY;
                    for j in (0..=k).rev() {
                        if j < k {
                            run = run.min(ra[j]);
                        }
                        let d = t0 - times[j];
                        if i.is_past(d) {
                            break;
                        }
                        if i.contains(d) {
                            best = best.max(rb[j].min(run));
                        }
                    }
                    best
                })
                .collect()
        }
        Formula::Eventually(i, f) => {
            let r = rec(f)?;
            (0..n)
                .map(|k| {
                    future_window(times, k, i)
                        .map(|j| r[j])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect()
        }
        Formula::Always(i, f) => {
            let r = rec(f)?;
            (0..n)
                .map(|k| future_window(times, k, i).map(|j| r[j]).fold(f64::INFINITY, f64::min))
                .collect()
        }
        Formula::Once(i, f) => {
            let r = rec(f)?;
            (0..n)
                .map(|k| past_window(times, k, i).map(|j| r[j]).fold(f64::NEG_INFINITY, f64::max))
                .collect()
        }
        Formula::Historically(i, f) => {
            let r = rec(f)?;
            (0..n)
                .map(|k| past_window(times, k, i).map(|j| r[j]).fold(f64::INFINITY, f64::min))
                .collect()
        }
    })
}

fn boolean(phi: &Formula, trace: &TimedTrace, pmap: &PredicateMap) -> Result<Vec<bool>> {
    let n = trace.len();
    let times = trace.times();
    let rec = |f: &Formula| boolean(f, trace, pmap);
    Ok(match phi {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Atom(name) => {
            let p = pmap.lookup(name)?;
            trace.states().iter().map(|s| p.contains(s)).collect()
        }
        Formula::Not(f) => rec(f)?.into_iter().map(|v| !v).collect(),
        Formula::And(a, b) => zip_with(rec(a)?, rec(b)?, |x, y| x && y),
        Formula::Or(a, b) => zip_with(rec(a)?, rec(b)?, |x, y| x || y),
        Formula::Until(i, a, b) => {
            let (ba, bb) = (rec(a)?, rec(b)?);
            (0..n)
                .map(|k| {
                    let t0 = times[k];
                    let mut held = true;
                    for j in k..n {
                        let d = times[j] - t0;
                        if i.is_past(d) || !held {
                            break;
                        }
                        if i.contains(d) && bb[j] {
                            return true;
                        }
                        held = ba[j];
                    }
                    false
                })
                .collect()
        }
        Formula::Since(i, a, b) => {
            let (ba, bb) = (rec(a)?, rec(b)?);
            (0..n)
                .map(|k| {
                    let t0 = times[k];
                    for j in (0..=k).rev() {
                        if j < k && !ba[j] {
                            return false;
                        }
                        let d = t0 - times[j];
                        if i.is_past(d) {
                            return false;
                        }
                        if i.contains(d) && bb[j] {
                            return true;
                        }
                    }
                    false
                })
                .collect()
        }
        Formula::Eventually(i, f) => {
            let b = rec(f)?;
            (0..n).map(|k| future_window(times, k, i).any(|j| b[j])).collect()
        }
        Formula::Always(i, f) => {
            let b = rec(f)?;
            (0..n).map(|k| future_window(times, k, i).all(|j| b[j])).collect()
        }
        Formula::Once(i, f) => {
            let b = rec(f)?;
            (0..n).map(|k| past_window(times, k, i).any(|j| b[j])).collect()
        }
        Formula::Historically(i, f) => {
            let b = rec(f)?;
            (0..n).map(|k| past_window(times, k, i).all(|j| b[j])).collect()
        }
    })
}

fn zip_with<T: Copy>(a: Vec<T>, b: Vec<T>, f: impl Fn(T, T) -> T) -> Vec<T> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parser::parse;
    use crate::logic::predicate::AtomicPredicate;
    use nalgebra::DVector;

    /// times (0,1,2,3), values (0,3,5,1), predicate `p` = s >= 2.
    fn fixture() -> (TimedTrace, PredicateMap, Metric) {
        let tr = TimedTrace::unnamed(
            (0..4).map(Time::from_integer).collect(),
            [0.0, 3.0, 5.0, 1.0]
                .iter()
                .map(|v| DVector::from_vec(vec![*v]))
                .collect(),
        )
        .unwrap();
        let pm = PredicateMap::from_predicates(1, [AtomicPredicate::halfspace("p", vec![1.0], 2.0).unwrap()]).unwrap();
        (tr, pm, Metric::identity(1))
    }

    fn rob(text: &str, k: usize) -> f64 {
        let (tr, pm, m) = fixture();
        eval_robust(&parse(text).unwrap(), &tr, k, &pm, &m).unwrap()
    }

    fn sat(text: &str, k: usize) -> bool {
        let (tr, pm, m) = fixture();
        eval_boolean(&parse(text).unwrap(), &tr, k, &pm, &m).unwrap()
    }

    #[test]
    fn boolean_examples() {
        assert!(sat("F[0,2) p", 0));
        assert!(sat("true", 2));
        assert!(!sat("G[0,4) p", 0));
    }

    #[test]
    fn robust_examples() {
        assert_eq!(rob("p", 1), 1.0);
        assert_eq!(rob("F[0,3) p", 0), 3.0);
        assert_eq!(rob("G[1,4) p", 0), -1.0);
        assert_eq!(rob("P[1,3) p", 3), 3.0);
        assert_eq!(rob("!p", 1), -1.0);
        assert_eq!(rob("true", 0), f64::INFINITY);
        assert_eq!(rob("false", 0), f64::NEG_INFINITY);
    }

    #[test]
    fn finite_trace_boundaries() {
        // Window [5,6) lies beyond the trace end.
        assert_eq!(rob("F[5,6) p", 0), f64::NEG_INFINITY);
        assert!(!sat("F[5,6) p", 0));
        assert_eq!(rob("G[5,6) p", 0), f64::INFINITY);
        assert!(sat("G[5,6) p", 0));
        assert_eq!(rob("P[1,2) p", 0), f64::NEG_INFINITY);
        assert!(sat("H[1,2) p", 0));
    }

    #[test]
    fn until_and_since_inner_ranges() {
        // q U[1,3) p at 0: k'=1 gives min(p(1), q(0)); k'=2 gives min(p(2), q(0), q(1)).
        let (tr, _, m) = fixture();
        let mut pm = PredicateMap::new(1);
        pm.insert(AtomicPredicate::halfspace("p", vec![1.0], 2.0).unwrap())
            .unwrap();
        pm.insert(AtomicPredicate::halfspace("q", vec![-1.0], -4.0).unwrap())
            .unwrap();
        let q: Vec<f64> = [0.0f64, 3.0, 5.0, 1.0].iter().map(|s| 4.0 - s).collect();
        let p: Vec<f64> = [0.0f64, 3.0, 5.0, 1.0].iter().map(|s| s - 2.0).collect();
        let u = eval_robust(&parse("q U[1,3) p").unwrap(), &tr, 0, &pm, &m).unwrap();
        assert_eq!(u, p[1].min(q[0]).max(p[2].min(q[0]).min(q[1])));
        // q S[1,3) p at 3: k'=2 gives min(p(2), q(2)); k'=1 gives min(p(1), q(1), q(2)).
        let s = eval_robust(&parse("q S[1,3) p").unwrap(), &tr, 3, &pm, &m).unwrap();
        assert_eq!(s, p[2].min(q[2]).max(p[1].min(q[1]).min(q[2])));
        assert_eq!(
            eval_boolean(&parse("q S[1,3) p").unwrap(), &tr, 3, &pm, &m).unwrap(),
            s > 0.0
        );
    }

    #[test]
    fn errors() {
        let (tr, pm, m) = fixture();
        assert!(matches!(
            eval_robust(&parse("p").unwrap(), &tr, 4, &pm, &m),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            eval_boolean(&parse("zz").unwrap(), &tr, 0, &pm, &m),
            Err(Error::UnknownAtom(_))
        ));
        assert!(eval_robust(&parse("p").unwrap(), &tr, 0, &pm, &Metric::identity(2)).is_err());
    }
}
