//! Learning per-location environment decision formulas and certifying the
//! perturbation radii under which they keep working.

mod classifier;
mod conditions;
mod grid;
mod radii;
mod samples;
mod tree;

use std::collections::BTreeMap;

use serde::Serialize;

pub use classifier::{structural_partition, Branch, Classifier, Exclusivity, LocationClassifier};
pub use conditions::{
    adversarial_perturbation, check_adversarial, check_conditions, margin_crosscheck, Adversary, ConditionReport,
    ConditionResult,
};
pub use grid::{Comparison, Primitive, PrimitiveGrid, TemporalOp};
pub use radii::{compute_radii, Radii};
pub use samples::{collect_location_samples, LocationSample, LocationSamples};
pub use tree::{best_cover, grow_tree, LeafBranch, Literal, TreeData};

use crate::demos::DemonstrationSet;
use crate::error::{Error, Result};
use crate::logic::{robust_series, Formula, PredicateMap};
use crate::scenario::{Scenario, Tradeoff};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceOptions {
    pub epsilon: f64,
    pub max_depth: usize,
    pub tradeoff: Tradeoff,
}

impl InferenceOptions {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        InferenceOptions {
            epsilon: scenario.config.inference.epsilon,
            max_depth: scenario.config.inference.max_depth,
            tradeoff: scenario.tradeoff,
        }
    }
}

/// Names threshold atoms `h<f>_<ge|le>_<n>` in order of first use.
#[derive(Default)]
struct AtomNames {
    by_key: BTreeMap<(usize, Comparison, u64), String>,
    counts: BTreeMap<(usize, Comparison), usize>,
    order: Vec<(String, Primitive)>,
}

impl AtomNames {
    fn name(&mut self, p: &Primitive) -> String {
        let key = (p.feature, p.cmp, p.threshold.to_bits());
        if let Some(n) = self.by_key.get(&key) {
            return n.clone();
        }
        let c = self.counts.entry((p.feature, p.cmp)).or_insert(0);
        *c += 1;
        let name = format!("h{}_{}_{}", p.feature + 1, p.cmp.tag(), c);
        self.by_key.insert(key, name.clone());
        self.order.push((name.clone(), *p));
        name
    }
}

fn branch_formula(literals: &[Literal], names: &mut AtomNames, scenario: &Scenario) -> Formula {
    Formula::conjunction(literals.iter().map(|(p, pos)| {
        let f = p.formula(&names.name(p), scenario.period);
        if *pos {
            f
        } else {
            Formula::not(f)
        }
    }))
}

/// Full pipeline: samples, trees, margins, radii.
pub fn infer(
    scenario: &Scenario,
    demos: &DemonstrationSet,
    demos_path: &str,
    opts: &InferenceOptions,
) -> Result<Classifier> {
    if !(opts.epsilon.is_finite() && opts.epsilon >= 0.0) {
        return Err(Error::Scenario(format!(
            "epsilon {} must be a non-negative number",
            opts.epsilon
        )));
    }
    let samples = collect_location_samples(demos, scenario)?;
    let grid = PrimitiveGrid::new(
        scenario.inference_features(),
        scenario.config.inference.max_window,
        scenario.period,
        &scenario.feature_metric,
    );
    let inputs = scenario.plant.inputs();

    let mut names = AtomNames::default();
    let mut learned = Vec::new();
    for (location, smp) in samples.per_location.iter().enumerate() {
        if smp.is_empty() {
            continue;
        }
        let aggregates: Vec<Vec<(f64, f64)>> = smp
            .iter()
            .map(|s| grid.aggregates(&demos.demos[s.id.demo], s.env_index))
            .collect();
        let data = TreeData {
            samples: smp,
            aggregates: &aggregates,
            grid: &grid,
            inputs,
        };
        let leaves = grow_tree(&data, opts.epsilon, opts.max_depth, location)?;
        let formulas: Vec<Formula> = leaves
            .iter()
            .map(|l| branch_formula(&l.literals, &mut names, scenario))
            .collect();
        learned.push((location, smp, leaves, formulas));
    }

    let mut predicates = PredicateMap::new(scenario.feature_dim());
    for (name, p) in &names.order {
        predicates.insert(p.predicate(name, scenario.feature_dim())?)?;
    }

    let mut locations = Vec::new();
    for (location, smp, leaves, formulas) in learned {
        let mut branches = Vec::new();
        for (leaf, formula) in leaves.iter().zip(formulas) {
            let mut series: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            let mut margin = f64::INFINITY;
            for &s in &leaf.samples {
                let sample = smp[s];
                let demo = &demos.demos[sample.id.demo];
                if (&inputs[sample.label] - &inputs[leaf.input]).norm() > opts.epsilon {
                    return Err(Error::Corruption(format!(
                        "sample {} routed to an input farther than epsilon",
                        sample.id
                    )));
                }
                let rho = match series.get(&sample.id.demo) {
                    Some(r) => r[sample.env_index],
                    None => {
                        let r = robust_series(&formula, &demo.h, &predicates, &scenario.feature_metric)?;
                        let v = r[sample.env_index];
                        series.insert(sample.id.demo, r);
                        v
                    }
                };
                if rho.is_nan() || rho <= 0.0 {
                    return Err(Error::ZeroMargin {
                        location,
                        formula: formula.to_string(),
                        sample: sample.id,
                        value: rho,
                    });
                }
                margin = margin.min(rho);
            }
            branches.push(Branch {
                formula,
                input: leaf.input,
                input_value: inputs[leaf.input].clone(),
                margin,
                samples: leaf.samples.len(),
            });
        }
        locations.push(LocationClassifier {
            location,
            branches,
            samples: smp.len(),
        });
    }

    let margin = locations
        .iter()
        .map(LocationClassifier::margin)
        .fold(f64::INFINITY, f64::min);
    let alpha = scenario
        .plant
        .state_propagation_bound(&scenario.state_metric, scenario.horizon)?;
    let radii = compute_radii(
        demos.rho_min(),
        margin,
        scenario.spec_map.l_x(),
        alpha,
        scenario.spec_map.l_h(),
        opts.tradeoff,
    )?;
    let exclusivity = if locations.iter().all(|l| structural_partition(&l.branches)) {
        Exclusivity::Structural
    } else {
        Exclusivity::SampledOnly
    };
    Ok(Classifier {
        spec: scenario.config.spec.clone(),
        fingerprint: scenario.fingerprint.clone(),
        epsilon: opts.epsilon,
        max_depth: opts.max_depth,
        grid: grid.to_string(),
        demos: demos_path.to_string(),
        demo_digest: demos.digest.clone(),
        initial_states: demos.demos.iter().map(|d| d.x0().clone()).collect(),
        radii,
        predicates,
        locations,
        uncovered: samples.uncovered,
        exclusivity,
    })
}

#[derive(Debug, Serialize)]
struct LocationSummary {
    location: usize,
    samples: usize,
    branches: usize,
    margin: f64,
}

#[derive(Debug, Serialize)]
struct InferenceSummary<'a> {
    spec: &'a str,
    fingerprint: &'a str,
    demonstrations: usize,
    epsilon: f64,
    delta_c: f64,
    delta_e: f64,
    exclusivity: String,
    uncovered: &'a [usize],
    radii: &'a Radii,
    locations: Vec<LocationSummary>,
}

/// Inference report with a stable key order.
pub fn inference_report(classifier: &Classifier) -> String {
    let summary = InferenceSummary {
        spec: &classifier.spec,
        fingerprint: &classifier.fingerprint,
        demonstrations: classifier.initial_states.len(),
        epsilon: classifier.epsilon,
        delta_c: classifier.radii.delta_c,
        delta_e: classifier.radii.delta_e,
        exclusivity: classifier.exclusivity.to_string(),
        uncovered: &classifier.uncovered,
        radii: &classifier.radii,
        locations: classifier
            .locations
            .iter()
            .map(|l| LocationSummary {
                location: l.location,
                samples: l.samples,
                branches: l.branches.len(),
                margin: l.margin(),
            })
            .collect(),
    };
    toml::to_string(&summary).expect("report serializes")
}
