use nalgebra::DVector;

use super::sequential::SequentialSpec;
use crate::error::{Error, Result};
use crate::logic::{Metric, PredicateMap};
use crate::time::Time;
use crate::trace::TimedTrace;

/// Location and clock reported after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocationState {
    pub location: usize,
    /// Time since the location was last entered.
    pub clock: Time,
    pub entry: Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub time: Time,
    pub state: LocationState,
    /// A configuration entered the reported location at this step.
    pub entered: bool,
    /// Smallest `|signed distance|` to a reach predicate whose timing window
    /// is open at this step; `inf` when no reach transition can fire.
    pub transition_margin: f64,
    /// Smallest time left before the deadline among transitions that fired.
    pub deadline_slack: f64,
    /// Avoid predicates violated at this step.
    pub violated: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationRun {
    pub steps: Vec<StepRecord>,
    /// First step at which the final reach location was entered.
    pub reached_final: Option<usize>,
    /// First step from which the reach chain can no longer be completed.
    pub deadline_violation: Option<usize>,
    /// `(k, predicate)` for every avoid violation.
    pub safety_violations: Vec<(usize, String)>,
}

impl LocationRun {
    pub fn accepted(&self) -> bool {
        self.reached_final.is_some() && self.safety_violations.is_empty()
    }

    pub fn locations(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.state.location).collect()
    }

    /// Smallest transition margin over the run.
    pub fn min_transition_margin(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.transition_margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_deadline_slack(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.deadline_slack)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Online tracker over the set of live configurations `(level, entry time)`.
///
/// Tracking every configuration, rather than only the earliest firing, makes
/// acceptance coincide with the Boolean semantics of the specification.
#[derive(Debug, Clone)]
pub struct LocationTracker<'a> {
    spec: &'a SequentialSpec,
    pmap: &'a PredicateMap,
    metric: &'a Metric,
    live: Vec<Vec<Time>>,
    last_entry: Vec<Option<Time>>,
    start: Option<Time>,
    last_time: Option<Time>,
    location: usize,
    run: LocationRun,
}

impl<'a> LocationTracker<'a> {
    pub fn new(spec: &'a SequentialSpec, pmap: &'a PredicateMap, metric: &'a Metric) -> Result<Self> {
        for (p, _) in spec.chain.iter().chain(spec.safety.iter()) {
            pmap.lookup(p)?;
        }
        if metric.dim() != pmap.dim() {
            return Err(Error::Dimension {
                expected: pmap.dim(),
                got: metric.dim(),
            });
        }
        let n = spec.chain.len();
        Ok(LocationTracker {
            spec,
            pmap,
            metric,
            live: vec![Vec::new(); n],
            last_entry: vec![None; n + 1],
            start: None,
            last_time: None,
            location: 0,
            run: LocationRun {
                steps: Vec::new(),
                reached_final: None,
                deadline_violation: None,
                safety_violations: Vec::new(),
            },
        })
    }

    pub fn location(&self) -> usize {
        self.location
    }

    pub fn run(&self) -> &LocationRun {
        &self.run
    }

    pub fn finish(self) -> LocationRun {
        self.run
    }

    pub fn step(&mut self, t: Time, q: &DVector<f64>) -> Result<&StepRecord> {
        if q.len() != self.pmap.dim() {
            return Err(Error::Dimension {
                expected: self.pmap.dim(),
                got: q.len(),
            });
        }
        if let Some(prev) = self.last_time {
            if t <= prev {
                return Err(Error::TraceMismatch(format!(
                    "timestamps must increase strictly ({prev} then {t})"
                )));
            }
        }
        let k = self.run.steps.len();
        let n = self.spec.chain.len();
        let start = *self.start.get_or_insert(t);
        if k == 0 {
            if n == 0 {
                self.run.reached_final = Some(0);
            } else {
                self.live[0].push(t);
            }
            self.last_entry[0] = Some(t);
        }

        let mut margin = f64::INFINITY;
        let mut slack = f64::INFINITY;
        let mut entered_levels = vec![k == 0 && n > 0; n + 1];
        if k == 0 && n == 0 {
            entered_levels[0] = true;
        }
        let done = self.run.reached_final.is_some();
        for j in 0..n {
            if done || self.live[j].is_empty() {
                continue;
            }
            let (name, window) = &self.spec.chain[j];
            let pred = self.pmap.lookup(name)?;
            let mut sd = None;
            let mut fired = false;
            for &e in &self.live[j] {
                let c = t - e;
                if window.contains(c) {
                    let d = match sd {
                        Some(d) => d,
                        None => {
                            let d = pred.signed_distance(q, self.metric)?;
                            sd = Some(d);
                            d
                        }
                    };
                    margin = margin.min(d.abs());
                    if pred.contains(q) {
                        fired = true;
                        if let Some(h) = window.hi().finite() {
                            slack = slack.min((h - c).to_f64());
                        }
                    }
                }
            }
            if fired {
                self.last_entry[j + 1] = Some(t);
                entered_levels[j + 1] = true;
                if j + 1 == n {
                    self.run.reached_final.get_or_insert(k);
                } else if !self.live[j + 1].contains(&t) {
                    self.live[j + 1].push(t);
                }
            }
        }
        for j in 0..n {
            let window = self.spec.chain[j].1;
            self.live[j].retain(|&e| !window.is_past(t - e));
        }

        if self.run.reached_final.is_some() {
            self.location = n;
        } else if let Some(top) = (0..n).rev().find(|&j| !self.live[j].is_empty()) {
            self.location = self.location.max(top);
        } else if self.run.deadline_violation.is_none() {
            self.run.deadline_violation = Some(k);
        }

        let mut violated = Vec::new();
        for (name, window) in &self.spec.safety {
            if window.contains(t - start) && self.pmap.lookup(name)?.contains(q) {
                violated.push(name.clone());
                self.run.safety_violations.push((k, name.clone()));
            }
        }

        let entry = self.last_entry[self.location].unwrap_or(start);
        self.run.steps.push(StepRecord {
            k,
            time: t,
            state: LocationState {
                location: self.location,
                clock: t - entry,
                entry,
            },
            entered: entered_levels[self.location],
            transition_margin: margin,
            deadline_slack: slack,
            violated,
        });
        self.last_time = Some(t);
        Ok(self.run.steps.last().expect("just pushed"))
    }
}

/// Track locations over a complete feature trace.
pub fn track_location(
    spec: &SequentialSpec,
    q: &TimedTrace,
    pmap: &PredicateMap,
    metric: &Metric,
) -> Result<LocationRun> {
    if q.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut tracker = LocationTracker::new(spec, pmap, metric)?;
    for k in 0..q.len() {
        tracker.step(q.time(k), q.state(k))?;
    }
    Ok(tracker.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::parse_sequential;
    use crate::logic::{eval_boolean, parse, AtomicPredicate};

    fn setup(text: &str) -> (SequentialSpec, PredicateMap, Metric) {
        let spec = parse_sequential(&parse(text).unwrap()).unwrap();
        let pmap = PredicateMap::from_predicates(
            1,
            [
                AtomicPredicate::boxed("a", vec![1.0], vec![2.0]).unwrap(),
                AtomicPredicate::boxed("b", vec![3.0], vec![4.0]).unwrap(),
                AtomicPredicate::boxed("bad", vec![-1.0], vec![-0.5]).unwrap(),
            ],
        )
        .unwrap();
        (spec, pmap, Metric::identity(1))
    }

    fn trace(xs: &[f64]) -> TimedTrace {
        TimedTrace::unnamed(
            (0..xs.len()).map(|k| Time::from_integer(k as i64)).collect(),
            xs.iter().map(|x| DVector::from_vec(vec![*x])).collect(),
        )
        .unwrap()
    }

    #[test]
    fn progresses_and_accepts() {
        let (spec, pmap, m) = setup("F[0,5)(a & F[0,5) b) & G[0,10) !bad");
        let q = trace(&[0.0, 1.5, 2.5, 3.5, 3.5]);
        let run = track_location(&spec, &q, &pmap, &m).unwrap();
        assert_eq!(run.locations(), vec![0, 1, 1, 2, 2]);
        assert!(run.accepted());
        assert_eq!(run.steps[1].state.clock, Time::ZERO);
        assert!(run.steps[1].entered);
        assert_eq!(run.steps[2].state.clock, Time::from_integer(1));
        assert_eq!(run.steps[1].transition_margin, 0.5);
        assert_eq!(run.steps[4].transition_margin, f64::INFINITY);
    }

    #[test]
    fn deadline_miss_is_flagged() {
        let (spec, pmap, m) = setup("F[0,3) a");
        let q = trace(&[0.0, 0.0, 0.0, 0.0, 1.5]);
        let run = track_location(&spec, &q, &pmap, &m).unwrap();
        assert_eq!(run.deadline_violation, Some(3));
        assert!(!run.accepted());
        assert_eq!(run.locations(), vec![0; 5]);
    }

    #[test]
    fn later_firing_rescues_chain() {
        // Earliest entry into `a` cannot reach `b` in time; a later one can.
        let (spec, pmap, m) = setup("F[0,10)(a & F[0,3) b)");
        let xs = [1.5, 0.0, 0.0, 0.0, 1.5, 2.5, 3.5];
        let q = trace(&xs);
        let run = track_location(&spec, &q, &pmap, &m).unwrap();
        assert!(run.accepted());
        let phi = spec.to_formula();
        assert!(eval_boolean(&phi, &q, 0, &pmap, &m).unwrap());
    }

    #[test]
    fn cascade_within_step() {
        let (spec, pmap, m) = setup("F[0,5)(a & F[0,5) a)");
        let run = track_location(&spec, &trace(&[1.5]), &pmap, &m).unwrap();
        assert_eq!(run.reached_final, Some(0));
    }

    #[test]
    fn safety_violation_recorded() {
        let (spec, pmap, m) = setup("F[0,5) a & G[0,3) !bad");
        let run = track_location(&spec, &trace(&[-0.7, 1.5, -0.7, -0.7]), &pmap, &m).unwrap();
        assert_eq!(run.safety_violations, vec![(0, "bad".into()), (2, "bad".into())]);
        assert!(!run.accepted());
    }
}
