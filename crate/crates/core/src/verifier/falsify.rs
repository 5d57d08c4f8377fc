use std::cmp::Ordering;

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use super::problem::{VerificationProblem, INSIDE};
use super::{confirm_counterexample, simulate_point, Counterexample};
use crate::closed_loop::ClosedLoop;
use crate::error::Result;
use crate::inference::Classifier;
use crate::logic::Metric;
use crate::sampling::{stream_rng, unit_direction};
use crate::scenario::Scenario;
use crate::trace::TimedTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FalsifyOptions {
    pub restarts: usize,
    pub iterations: usize,
}

impl Default for FalsifyOptions {
    fn default() -> Self {
        FalsifyOptions {
            restarts: 10,
            iterations: 50,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FalsificationResult {
    pub restarts: usize,
    pub iterations: usize,
    pub evaluations: usize,
    pub found: bool,
    pub best_robustness: f64,
    pub best_demo: usize,
    #[serde(skip)]
    pub counterexample: Option<Counterexample>,
}

/// Perturbation parameters: initial state offset and a constant shift of
/// every feature row.
#[derive(Debug, Clone)]
struct Point {
    dx: DVector<f64>,
    dh: DVector<f64>,
}

fn project(v: &mut DVector<f64>, metric: &Metric, radius: f64) {
    let n = metric.norm(v);
    let r = radius * INSIDE;
    if n > r {
        *v *= if n > 0.0 { r / n } else { 0.0 };
    }
}

fn shifted(h: &TimedTrace, dh: &DVector<f64>) -> Result<TimedTrace> {
    h.map_states(h.names().to_vec(), |s| s + dh)
}

struct Search<'a> {
    problem: &'a VerificationProblem,
    cl: &'a ClosedLoop<'a>,
    evaluations: usize,
}

impl Search<'_> {
    /// Robustness at `p` around demonstration `demo` and whether the run
    /// violates the specification; `None` when the initial state leaves the
    /// bounding box.
    fn eval(&mut self, demo: usize, p: &Point) -> Result<Option<(f64, bool)>> {
        let x0 = &self.problem.x0_centers[demo] + &p.dx;
        if !self.problem.in_box(&x0) {
            return Ok(None);
        }
        let h = shifted(&self.problem.tubes[demo].h, &p.dh)?;
        self.evaluations += 1;
        let r = simulate_point(self.problem, self.cl, demo, &x0, &h)?;
        Ok(Some((r.robustness, !r.satisfied || r.robustness < 0.0)))
    }
}

/// Coordinate descent on the perturbation parameters minimizing the
/// specification's robustness. Restarts take the demonstrations in order of
/// nominal robustness, then deadline slack; restarts beyond the number of
/// demonstrations start from seeded random points. Stops at the first
/// strictly negative robustness or Boolean violation.
pub fn falsify(
    problem: &VerificationProblem,
    classifier: &Classifier,
    scenario: &Scenario,
    opts: FalsifyOptions,
) -> Result<FalsificationResult> {
    problem.validate(classifier, scenario)?;
    let cl = ClosedLoop::new(scenario, classifier)?;
    let n = scenario.state_dim();
    let p = scenario.feature_dim();
    let zero = Point {
        dx: DVector::zeros(n),
        dh: DVector::zeros(p),
    };

    let mut nominal = Vec::new();
    for demo in 0..problem.x0_centers.len() {
        let x0 = &problem.x0_centers[demo];
        let r = simulate_point(problem, &cl, demo, x0, &problem.tubes[demo].h)?;
        nominal.push((r.robustness, r.run.min_deadline_slack(), demo, r.satisfied));
    }
    nominal.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut search = Search {
        problem,
        cl: &cl,
        evaluations: nominal.len(),
    };
    let mut best = (nominal[0].0, nominal[0].2, zero.clone());
    let mut hit: Option<(usize, Point)> = None;
    if let Some(&(_, _, demo, _)) = nominal.iter().find(|v| v.0 < 0.0 || !v.3) {
        hit = Some((demo, zero.clone()));
    }

    let steps0: Vec<f64> = (0..n)
        .map(|i| problem.x0_radius / scenario.state_metric.matrix()[(i, i)].sqrt())
        .chain((0..p).map(|i| problem.tube_radius / scenario.feature_metric.matrix()[(i, i)].sqrt()))
        .collect();

    'restarts: for r in 0..opts.restarts {
        if hit.is_some() {
            break;
        }
        let demo = nominal[r % nominal.len()].2;
        let mut z = if r < nominal.len() {
            zero.clone()
        } else {
            let mut rng = stream_rng(problem.seed, (1u64 << 32) + r as u64);
            let dx = unit_direction(&mut rng, &scenario.state_metric) * (problem.x0_radius * rng.random::<f64>());
            let dh = unit_direction(&mut rng, &scenario.feature_metric) * (problem.tube_radius * rng.random::<f64>());
            Point { dx, dh }
        };
        project(&mut z.dx, &scenario.state_metric, problem.x0_radius);
        project(&mut z.dh, &scenario.feature_metric, problem.tube_radius);
        let Some((mut value, mut violated)) = search.eval(demo, &z)? else {
            continue;
        };
        let mut steps = steps0.clone();
        for _ in 0..opts.iterations {
            if value < best.0 {
                best = (value, demo, z.clone());
            }
            if violated {
                hit = Some((demo, z));
                break 'restarts;
            }
            let mut improved = false;
            #[allow(clippy::needless_range_loop)]
            for c in 0..n + p {
                if steps[c] == 0.0 {
                    continue;
                }
                for sign in [-1.0, 1.0] {
                    let mut cand = z.clone();
                    if c < n {
                        cand.dx[c] += sign * steps[c];
                        project(&mut cand.dx, &scenario.state_metric, problem.x0_radius);
                    } else {
                        cand.dh[c - n] += sign * steps[c];
                        project(&mut cand.dh, &scenario.feature_metric, problem.tube_radius);
                    }
                    if let Some((v, bad)) = search.eval(demo, &cand)? {
                        if bad || v.total_cmp(&value) == Ordering::Less {
                            value = v;
                            violated = bad;
                            z = cand;
                            improved = true;
                            break;
                        }
                    }
                }
                if violated {
                    break;
                }
            }
            if !improved {
                steps.iter_mut().for_each(|s| *s *= 0.5);
            }
        }
        if value < best.0 {
            best = (value, demo, z.clone());
        }
        if violated {
            hit = Some((demo, z));
            break;
        }
    }

    let counterexample = match hit {
        Some((demo, z)) => {
            let x0 = &problem.x0_centers[demo] + &z.dx;
            let h = shifted(&problem.tubes[demo].h, &z.dh)?;
            let c = confirm_counterexample(problem, &cl, "search", demo, x0, h)?;
            best = (c.result.robustness.min(best.0), demo, z);
            Some(c)
        }
        None => None,
    };
    Ok(FalsificationResult {
        restarts: opts.restarts,
        iterations: opts.iterations,
        evaluations: search.evaluations,
        found: counterexample.is_some(),
        best_robustness: best.0,
        best_demo: best.1,
        counterexample,
    })
}
