use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::classifier::{Classifier, Exclusivity};
use super::samples::collect_location_samples;
use crate::closed_loop::ClosedLoop;
use crate::demos::{Demonstration, DemonstrationSet};
use crate::error::{Error, Result};
use crate::logic::{eval_boolean, robust_series, Formula, Shape};
use crate::sampling::{stream_rng, unit_direction};
use crate::scenario::Scenario;
use crate::trace::TimedTrace;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    /// Perturbed demonstrations examined.
    pub checked: usize,
    /// Perturbed demonstrations with at least one violation.
    pub violations: usize,
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub radius_c: f64,
    pub radius_e: f64,
    pub samples: usize,
    pub seed: u64,
    /// Stored branch margins equal a fresh evaluation on the training data.
    pub margin_crosscheck: bool,
    pub conditions: Vec<ConditionResult>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.margin_crosscheck && self.conditions.iter().all(|c| c.passed)
    }

    pub fn condition(&self, id: u8) -> &ConditionResult {
        self.conditions.iter().find(|c| c.id == id).expect("conditions 1 to 4")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }
}

/// Violations found on one perturbed demonstration, per condition.
#[derive(Debug, Default)]
struct Outcome {
    found: [Option<String>; 4],
}

fn perturb_features(h: &TimedTrace, f: impl Fn(usize) -> DVector<f64>) -> Result<TimedTrace> {
    let states = (0..h.len()).map(|j| h.state(j) + f(j)).collect();
    TimedTrace::new(h.names().to_vec(), h.times().to_vec(), states)
}

/// Conditions (1) to (3) (and a sampled (4)) on demonstration `i` under a
/// perturbed start and feature trace.
#[allow(clippy::too_many_arguments)]
fn check_one(
    tag: &str,
    i: usize,
    demo: &Demonstration,
    run: &[usize],
    x0: &DVector<f64>,
    h: &TimedTrace,
    classifier: &Classifier,
    scenario: &Scenario,
) -> Result<Outcome> {
    let mut out = Outcome::default();
    let agent = scenario
        .plant
        .simulate_open_loop(x0, demo.inputs.states(), demo.agent.times())?;
    let q = scenario.q_trace(&agent, h)?;
    if !eval_boolean(&scenario.formula, &q, 0, &scenario.predicates, &scenario.spec_metric)? {
        out.found[0] = Some(format!(
            "{tag}: demo {i} violates the specification under the recorded inputs"
        ));
    }
    let lp = ClosedLoop::new(scenario, classifier)?;
    let perturbed = lp.branch_table(h)?;
    let nominal = lp.branch_table(&demo.h)?;
    let inputs = scenario.plant.inputs();
    for (k, &location) in run.iter().take(demo.steps()).enumerate() {
        let row = demo.offset + k;
        let fired = lp.firing(&perturbed, location, row)?;
        let routed = lp.firing(&nominal, location, row)?;
        let loc = classifier
            .location(location)
            .ok_or(Error::UncoveredLocation(location))?;
        if fired.is_empty() && out.found[2].is_none() {
            out.found[2] = Some(format!("{tag}: demo {i}, k {k}, location {location}: no branch holds"));
        }
        if fired.len() > 1 && out.found[3].is_none() {
            out.found[3] = Some(format!(
                "{tag}: demo {i}, k {k}, location {location}: {} branches hold",
                fired.len()
            ));
        }
        if out.found[1].is_none() {
            let recorded = &inputs[demo.input_ids[k]];
            let far = fired
                .iter()
                .find(|&&b| (recorded - &loc.branches[b].input_value).norm() > classifier.epsilon);
            let lost = routed.iter().find(|b| !fired.contains(b));
            if let Some(b) = far {
                out.found[1] = Some(format!(
                    "{tag}: demo {i}, k {k}, location {location}: branch {b} selects an input farther than epsilon from the recorded one"
                ));
            } else if let Some(b) = lost {
                out.found[1] = Some(format!(
                    "{tag}: demo {i}, k {k}, location {location}: routed branch {b} no longer holds"
                ));
            }
        }
    }
    Ok(out)
}

fn assemble(
    outcomes: &[Outcome],
    classifier: &Classifier,
    crosscheck: bool,
    rc: f64,
    re: f64,
    seed: u64,
) -> ConditionReport {
    let names = [
        "robustness for system requirement",
        "robustness for soundness of the classifier",
        "robustness for coverage of the classifier",
        "mutual exclusivity",
    ];
    let conditions = (0..4)
        .map(|c| {
            let violations = outcomes.iter().filter(|o| o.found[c].is_some()).count();
            let counterexample = outcomes.iter().find_map(|o| o.found[c].clone());
            let (name, passed) = if c == 3 {
                match classifier.exclusivity {
                    Exclusivity::Structural => (format!("{} (structural)", names[c]), violations == 0),
                    Exclusivity::SampledOnly => (format!("{} (sampled only)", names[c]), violations == 0),
                }
            } else {
                (names[c].to_string(), violations == 0)
            };
            ConditionResult {
                id: c as u8 + 1,
                name,
                passed,
                checked: outcomes.len(),
                violations,
                counterexample,
            }
        })
        .collect();
    ConditionReport {
        radius_c: rc,
        radius_e: re,
        samples: outcomes.len(),
        seed,
        margin_crosscheck: crosscheck,
        conditions,
    }
}

/// Re-evaluate every branch on the training data with the logic core and
/// compare with the stored margins; also checks that exactly one branch
/// holds at every training step.
pub fn margin_crosscheck(classifier: &Classifier, demos: &DemonstrationSet, scenario: &Scenario) -> Result<bool> {
    let samples = collect_location_samples(demos, scenario)?;
    let lp = ClosedLoop::new(scenario, classifier)?;
    let mut recomputed: Vec<Vec<f64>> = classifier
        .locations
        .iter()
        .map(|l| vec![f64::INFINITY; l.branches.len()])
        .collect();
    for (i, demo) in demos.demos.iter().enumerate() {
        let table = lp.branch_table(&demo.h)?;
        for k in 0..demo.steps() {
            let location = samples.runs[i][k];
            let fired = lp.firing(&table, location, demo.offset + k)?;
            if fired.len() != 1 {
                return Ok(false);
            }
            let entry = classifier
                .locations
                .iter()
                .position(|l| l.location == location)
                .expect("covered");
            let rho = table.robustness[entry][fired[0]][demo.offset + k];
            let slot = &mut recomputed[entry][fired[0]];
            *slot = slot.min(rho);
        }
    }
    Ok(classifier
        .locations
        .iter()
        .zip(&recomputed)
        .all(|(l, r)| l.branches.iter().zip(r).all(|(b, m)| b.margin == *m)))
}

/// Sampled check of conditions (1) to (3) with start and feature
/// perturbations strictly inside `scale` times the certified radii.
pub fn check_conditions(
    classifier: &Classifier,
    demos: &DemonstrationSet,
    scenario: &Scenario,
    n_perturb: usize,
    seed: u64,
    scale: f64,
) -> Result<ConditionReport> {
    classifier.check_fingerprint(scenario)?;
    let rc = classifier.radii.delta_c * scale;
    let re = classifier.radii.delta_e * scale;
    let samples = collect_location_samples(demos, scenario)?;
    let crosscheck = margin_crosscheck(classifier, demos, scenario)?;
    let outcomes = (0..n_perturb)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, s as u64);
            let i = s % demos.len();
            let demo = &demos.demos[i];
            let dx = unit_direction(&mut rng, &scenario.state_metric) * (rc * rng.random::<f64>());
            let x0 = demo.x0() + dx;
            let common = unit_direction(&mut rng, &scenario.feature_metric) * rng.random::<f64>();
            let w: f64 = rng.random();
            let per_row: Vec<DVector<f64>> = (0..demo.h.len())
                .map(|_| unit_direction(&mut rng, &scenario.feature_metric) * rng.random::<f64>())
                .collect();
            let h = perturb_features(&demo.h, |j| (&common * w + &per_row[j] * (1.0 - w)) * re)?;
            check_one(
                &format!("perturbation {s}"),
                i,
                demo,
                &samples.runs[i],
                &x0,
                &h,
                classifier,
                scenario,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(&outcomes, classifier, crosscheck, rc, re, seed))
}

/// Constant feature shift aimed at the smallest-margin training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Adversary {
    pub demo: usize,
    pub k: usize,
    pub location: usize,
    pub branch: usize,
    /// The literal whose robustness the shift lowers.
    pub literal: String,
    pub shift: DVector<f64>,
}

fn literals(f: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::And(a, b) => {
            literals(a, out);
            literals(b, out);
        }
        Formula::True => {}
        other => out.push(other.clone()),
    }
}

/// Shift of metric length `radius` that lowers the weakest literal of the
/// smallest-margin routed sample as fast as possible.
pub fn adversarial_perturbation(
    classifier: &Classifier,
    demos: &DemonstrationSet,
    scenario: &Scenario,
    radius: f64,
) -> Result<Adversary> {
    let samples = collect_location_samples(demos, scenario)?;
    let lp = ClosedLoop::new(scenario, classifier)?;
    let mut best: Option<(f64, usize, usize, usize, usize)> = None;
    for (i, demo) in demos.demos.iter().enumerate() {
        let table = lp.branch_table(&demo.h)?;
        for k in 0..demo.steps() {
            let location = samples.runs[i][k];
            let fired = lp.firing(&table, location, demo.offset + k)?;
            let entry = classifier
                .locations
                .iter()
                .position(|l| l.location == location)
                .expect("covered");
            for b in fired {
                let rho = table.robustness[entry][b][demo.offset + k];
                if rho.is_finite() && best.is_none_or(|(r, ..)| rho < r) {
                    best = Some((rho, i, k, location, b));
                }
            }
        }
    }
    let (_, i, k, location, b) =
        best.ok_or_else(|| Error::Classifier("no branch has a finite margin to attack".into()))?;
    let demo = &demos.demos[i];
    let branch = &classifier.location(location).expect("covered").branches[b];
    let mut lits = Vec::new();
    literals(&branch.formula, &mut lits);
    let mut weakest: Option<(f64, &Formula)> = None;
    for lit in &lits {
        let r = robust_series(lit, &demo.h, &classifier.predicates, &scenario.feature_metric)?[demo.offset + k];
        if weakest.is_none_or(|(w, _)| r < w) {
            weakest = Some((r, lit));
        }
    }
    let (_, lit) = weakest.expect("a finite margin needs a literal");
    let (positive, body) = match lit {
        Formula::Not(inner) => (false, inner.as_ref()),
        other => (true, other),
    };
    let atom = body
        .atoms()
        .into_iter()
        .next()
        .ok_or_else(|| Error::Classifier(format!("literal `{lit}` has no atom")))?
        .to_string();
    let Shape::Halfspace { weights, .. } = classifier.predicates.lookup(&atom)?.shape() else {
        return Err(Error::Classifier(format!("atom `{atom}` is not a halfspace")));
    };
    let dir = scenario.feature_metric.steepest(weights);
    let shift = if positive { -dir * radius } else { dir * radius };
    Ok(Adversary {
        demo: i,
        k,
        location,
        branch: b,
        literal: lit.to_string(),
        shift,
    })
}

/// Conditions on the attacked demonstration under the adversarial shift.
pub fn check_adversarial(
    classifier: &Classifier,
    demos: &DemonstrationSet,
    scenario: &Scenario,
    adversary: &Adversary,
) -> Result<ConditionReport> {
    let samples = collect_location_samples(demos, scenario)?;
    let demo = &demos.demos[adversary.demo];
    let h = perturb_features(&demo.h, |_| adversary.shift.clone())?;
    let outcome = check_one(
        "adversarial shift",
        adversary.demo,
        demo,
        &samples.runs[adversary.demo],
        demo.x0(),
        &h,
        classifier,
        scenario,
    )?;
    let re = scenario.feature_metric.norm(&adversary.shift);
    Ok(assemble(&[outcome], classifier, true, 0.0, re, 0))
}
