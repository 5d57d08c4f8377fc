//! Classifier-in-the-loop simulation: at every step the automaton location
//! picks a branch list, the branch whose formula holds on the environment
//! history picks the input.

use nalgebra::DVector;

use crate::automaton::{LocationRun, LocationTracker};
use crate::error::{Error, Result};
use crate::inference::Classifier;
use crate::logic::{boolean_series, eval_boolean, eval_robust, robust_series};
use crate::scenario::Scenario;
use crate::trace::{default_names, TimedTrace};

/// Branch truth values and robustness over one environment feature trace,
/// indexed `[location entry][branch][row]`.
#[derive(Debug, Clone)]
pub struct BranchTable {
    pub holds: Vec<Vec<Vec<bool>>>,
    pub robustness: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub k: usize,
    pub location: usize,
    pub branch: usize,
    /// Index in the input set.
    pub input: usize,
    /// Robustness of the selected branch formula at this step.
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub agent: TimedTrace,
    pub inputs: Vec<usize>,
    pub q: TimedTrace,
    pub run: LocationRun,
    pub decisions: Vec<Decision>,
    pub robustness: f64,
    pub satisfied: bool,
}

impl SimulationResult {
    pub fn min_decision_margin(&self) -> f64 {
        self.decisions.iter().map(|d| d.margin).fold(f64::INFINITY, f64::min)
    }

    /// Recorded inputs as a `t,u1..um` trace (`None` when no step was taken).
    pub fn input_trace(&self, scenario: &Scenario) -> Result<Option<TimedTrace>> {
        if self.inputs.is_empty() {
            return Ok(None);
        }
        let us: Vec<DVector<f64>> = self
            .inputs
            .iter()
            .map(|&i| scenario.plant.inputs()[i].clone())
            .collect();
        crate::demos::input_trace(self.agent.times(), &us).map(Some)
    }
}

pub struct ClosedLoop<'a> {
    pub scenario: &'a Scenario,
    pub classifier: &'a Classifier,
}

impl<'a> ClosedLoop<'a> {
    pub fn new(scenario: &'a Scenario, classifier: &'a Classifier) -> Result<Self> {
        classifier.check_fingerprint(scenario)?;
        Ok(ClosedLoop { scenario, classifier })
    }

    pub fn branch_table(&self, h: &TimedTrace) -> Result<BranchTable> {
        let metric = &self.scenario.feature_metric;
        let preds = &self.classifier.predicates;
        let mut holds = Vec::new();
        let mut robustness = Vec::new();
        for loc in &self.classifier.locations {
            let mut hs = Vec::new();
            let mut rs = Vec::new();
            for b in &loc.branches {
                hs.push(boolean_series(&b.formula, h, preds, metric)?);
                rs.push(robust_series(&b.formula, h, preds, metric)?);
            }
            holds.push(hs);
            robustness.push(rs);
        }
        Ok(BranchTable { holds, robustness })
    }

    /// Branches of `location` whose formula holds at feature row `row`.
    pub fn firing(&self, table: &BranchTable, location: usize, row: usize) -> Result<Vec<usize>> {
        let entry = self
            .classifier
            .locations
            .iter()
            .position(|l| l.location == location)
            .ok_or(Error::UncoveredLocation(location))?;
        Ok(table.holds[entry]
            .iter()
            .enumerate()
            .filter(|(_, s)| s[row])
            .map(|(b, _)| b)
            .collect())
    }

    /// Select the unique firing branch at `location` and apply its input.
    pub fn step_closed_loop(
        &self,
        table: &BranchTable,
        location: usize,
        x: &DVector<f64>,
        row: usize,
        k: usize,
    ) -> Result<(DVector<f64>, Decision)> {
        let fired = self.firing(table, location, row)?;
        if fired.len() != 1 {
            return Err(Error::BranchSelection {
                location,
                k,
                count: fired.len(),
            });
        }
        let entry = self
            .classifier
            .locations
            .iter()
            .position(|l| l.location == location)
            .expect("checked by firing");
        let branch = fired[0];
        let b = &self.classifier.locations[entry].branches[branch];
        let next = self.scenario.plant.step(x, &self.scenario.plant.inputs()[b.input])?;
        Ok((
            next,
            Decision {
                k,
                location,
                branch,
                input: b.input,
                margin: table.robustness[entry][branch][row],
            },
        ))
    }

    /// Run `steps` steps from `x0`, reading features from row `start` of `h`
    /// onward (earlier rows are history).
    pub fn simulate(&self, x0: &DVector<f64>, h: &TimedTrace, start: usize, steps: usize) -> Result<SimulationResult> {
        let sc = self.scenario;
        if start + steps >= h.len() {
            return Err(Error::TraceMismatch(format!(
                "environment has {} rows from the start, {} steps need {}",
                h.len().saturating_sub(start),
                steps,
                steps + 1
            )));
        }
        if x0.len() != sc.state_dim() {
            return Err(Error::Dimension {
                expected: sc.state_dim(),
                got: x0.len(),
            });
        }
        let table = self.branch_table(h)?;
        let mut tracker = LocationTracker::new(&sc.sequential, &sc.predicates, &sc.spec_metric)?;
        let mut states = Vec::with_capacity(steps + 1);
        let mut qs = Vec::with_capacity(steps + 1);
        let mut decisions = Vec::with_capacity(steps);
        let mut x = x0.clone();
        for k in 0..=steps {
            let row = start + k;
            let q = sc.spec_map.apply(&x, h.state(row))?;
            let location = tracker.step(h.time(row), &q)?.state.location;
            qs.push(q);
            if k < steps {
                let (next, d) = self.step_closed_loop(&table, location, &x, row, k)?;
                decisions.push(d);
                states.push(std::mem::replace(&mut x, next));
            }
        }
        states.push(x);
        let times = h.times()[start..=start + steps].to_vec();
        let agent = TimedTrace::new(default_names("x", sc.state_dim()), times.clone(), states)?;
        let q = TimedTrace::new(sc.spec_names(), times, qs)?;
        let robustness = eval_robust(&sc.formula, &q, 0, &sc.predicates, &sc.spec_metric)?;
        let satisfied = eval_boolean(&sc.formula, &q, 0, &sc.predicates, &sc.spec_metric)?;
        Ok(SimulationResult {
            agent,
            inputs: decisions.iter().map(|d| d.input).collect(),
            q,
            run: tracker.finish(),
            decisions,
            robustness,
            satisfied,
        })
    }

    /// Simulate against a raw environment trace whose row `history` is the
    /// start.
    pub fn simulate_env(&self, x0: &DVector<f64>, env: &TimedTrace, steps: usize) -> Result<SimulationResult> {
        let h = self.scenario.env_features(env)?;
        self.simulate(x0, &h, self.scenario.history, steps)
    }
}

/// Plot data: per step robustness of the specification, the selected
/// branch's margin, the transition margin and the location.
pub fn plot_data(result: &SimulationResult, scenario: &Scenario) -> Result<String> {
    let rho = robust_series(
        &scenario.formula,
        &result.q,
        &scenario.predicates,
        &scenario.spec_metric,
    )?;
    let mut out = String::from("t,spec_robustness,decision_margin,transition_margin,location\n");
    for (k, step) in result.run.steps.iter().enumerate() {
        let margin = result.decisions.get(k).map_or(f64::NAN, |d| d.margin);
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            step.time, rho[k], margin, step.transition_margin, step.state.location
        ));
    }
    Ok(out)
}
