use std::fmt;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::radii::Radii;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::logic::{parse_formula, Formula, PredicateMap};
use crate::scenario::{PredicateConfig, Scenario};

const FORMAT: &str = "tlcl-classifier 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Past-time decision formula over the environment features.
    pub formula: Formula,
    /// Index of the selected input in the input set.
    pub input: usize,
    pub input_value: DVector<f64>,
    /// Smallest robustness of `formula` over the samples routed here.
    pub margin: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationClassifier {
    pub location: usize,
    pub branches: Vec<Branch>,
    pub samples: usize,
}

impl LocationClassifier {
    pub fn margin(&self) -> f64 {
        self.branches.iter().map(|b| b.margin).fold(f64::INFINITY, f64::min)
    }
}

/// How mutual exclusivity and coverage of the branch formulas is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exclusivity {
    /// Branch formulas are the leaves of a binary tree of literals.
    Structural,
    /// Only established by sampling.
    SampledOnly,
}

impl fmt::Display for Exclusivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Exclusivity::Structural => "structural",
            Exclusivity::SampledOnly => "sampled only",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub spec: String,
    pub fingerprint: String,
    pub epsilon: f64,
    pub max_depth: usize,
    pub grid: String,
    /// Directory the training demonstrations were read from.
    pub demos: String,
    pub demo_digest: String,
    pub initial_states: Vec<DVector<f64>>,
    pub radii: Radii,
    /// Threshold predicates over the environment features.
    pub predicates: PredicateMap,
    pub locations: Vec<LocationClassifier>,
    pub uncovered: Vec<usize>,
    pub exclusivity: Exclusivity,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifierFile {
    format: String,
    spec: String,
    fingerprint: String,
    epsilon: f64,
    max_depth: usize,
    grid: String,
    demos: String,
    demo_digest: String,
    exclusivity: String,
    uncovered: Vec<usize>,
    initial_states: Vec<Vec<f64>>,
    radii: Radii,
    predicates: Vec<PredicateConfig>,
    locations: Vec<LocationFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationFile {
    location: usize,
    samples: usize,
    branches: Vec<BranchFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchFile {
    formula: String,
    input: Vec<f64>,
    margin: f64,
    samples: usize,
}

fn flatten_literals<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    match f {
        Formula::True => {}
        Formula::And(a, b) => {
            flatten_literals(a, out);
            flatten_literals(b, out);
        }
        other => out.push(other),
    }
}

fn literal(f: &Formula) -> (&Formula, bool) {
    match f {
        Formula::Not(inner) => (inner, false),
        other => (other, true),
    }
}

fn partitions(paths: &[Vec<(&Formula, bool)>], depth: usize) -> bool {
    if paths.len() == 1 {
        return paths[0].len() == depth;
    }
    if paths.iter().any(|p| p.len() <= depth) {
        return false;
    }
    let node = paths[0][depth].0;
    if paths.iter().any(|p| p[depth].0 != node) {
        return false;
    }
    let (yes, no): (Vec<_>, Vec<_>) = paths.iter().cloned().partition(|p| p[depth].1);
    !yes.is_empty() && !no.is_empty() && partitions(&yes, depth + 1) && partitions(&no, depth + 1)
}

/// True when the branch formulas are the leaves of one binary tree of
/// literals `psi` / `!psi`, which makes exactly one of them hold on every
/// trace.
pub fn structural_partition(branches: &[Branch]) -> bool {
    if branches.is_empty() {
        return false;
    }
    let paths: Vec<Vec<(&Formula, bool)>> = branches
        .iter()
        .map(|b| {
            let mut lits = Vec::new();
            flatten_literals(&b.formula, &mut lits);
            lits.into_iter().map(literal).collect()
        })
        .collect();
    partitions(&paths, 0)
}

impl Classifier {
    pub fn location(&self, l: usize) -> Option<&LocationClassifier> {
        self.locations.iter().find(|c| c.location == l)
    }

    /// Smallest branch margin over all locations.
    pub fn margin(&self) -> f64 {
        self.locations
            .iter()
            .map(LocationClassifier::margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_fingerprint(&self, scenario: &Scenario) -> Result<()> {
        if self.fingerprint != scenario.fingerprint {
            return Err(Error::Fingerprint {
                expected: self.fingerprint.clone(),
                got: scenario.fingerprint.clone(),
            });
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        let file = ClassifierFile {
            format: FORMAT.into(),
            spec: self.spec.clone(),
            fingerprint: self.fingerprint.clone(),
            epsilon: self.epsilon,
            max_depth: self.max_depth,
            grid: self.grid.clone(),
            demos: self.demos.clone(),
            demo_digest: self.demo_digest.clone(),
            exclusivity: self.exclusivity.to_string(),
            uncovered: self.uncovered.clone(),
            initial_states: self
                .initial_states
                .iter()
                .map(|x| x.iter().copied().collect())
                .collect(),
            radii: self.radii.clone(),
            predicates: self.predicates.iter().map(PredicateConfig::from_predicate).collect(),
            locations: self
                .locations
                .iter()
                .map(|l| LocationFile {
                    location: l.location,
                    samples: l.samples,
                    branches: l
                        .branches
                        .iter()
                        .map(|b| BranchFile {
                            formula: b.formula.to_string(),
                            input: b.input_value.iter().copied().collect(),
                            margin: b.margin,
                            samples: b.samples,
                        })
                        .collect(),
                })
                .collect(),
        };
        toml::to_string(&file).expect("classifier serializes")
    }

    /// Parse and validate against `scenario` (fingerprint, inputs, past-only
    /// formulas). Exclusivity is recomputed rather than trusted.
    pub fn from_toml(text: &str, scenario: &Scenario) -> Result<Self> {
        let bad = |msg: String| Error::Classifier(msg);
        let file: ClassifierFile = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        if file.format != FORMAT {
            return Err(bad(format!("unsupported format `{}`", file.format)));
        }
        let predicates = PredicateMap::from_predicates(
            scenario.feature_dim(),
            file.predicates
                .iter()
                .map(PredicateConfig::build)
                .collect::<Result<Vec<_>>>()?,
        )?;
        predicates.validate_against(&scenario.feature_metric)?;
        let n = scenario.sequential.chain.len();
        let mut locations = Vec::new();
        for lf in &file.locations {
            if lf.location > n {
                return Err(bad(format!("location {} does not exist (last is {n})", lf.location)));
            }
            if locations.iter().any(|l: &LocationClassifier| l.location == lf.location) {
                return Err(bad(format!("location {} listed twice", lf.location)));
            }
            if lf.branches.is_empty() {
                return Err(bad(format!("location {} has no branches", lf.location)));
            }
            let mut branches = Vec::new();
            for bf in &lf.branches {
                let formula = parse_formula(&bf.formula, &predicates)?;
                if formula.has_future() {
                    return Err(bad(format!("branch `{}` uses future operators", bf.formula)));
                }
                let input_value = DVector::from_vec(bf.input.clone());
                let input = scenario.plant.input_index(&input_value)?;
                branches.push(Branch {
                    formula,
                    input,
                    input_value,
                    margin: bf.margin,
                    samples: bf.samples,
                });
            }
            locations.push(LocationClassifier {
                location: lf.location,
                branches,
                samples: lf.samples,
            });
        }
        let exclusivity = if locations.iter().all(|l| structural_partition(&l.branches)) {
            Exclusivity::Structural
        } else {
            Exclusivity::SampledOnly
        };
        let c = Classifier {
            spec: file.spec,
            fingerprint: file.fingerprint,
            epsilon: file.epsilon,
            max_depth: file.max_depth,
            grid: file.grid,
            demos: file.demos,
            demo_digest: file.demo_digest,
            initial_states: file.initial_states.into_iter().map(DVector::from_vec).collect(),
            radii: file.radii,
            predicates,
            locations,
            uncovered: file.uncovered,
            exclusivity,
        };
        c.check_fingerprint(scenario)?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>, scenario: &Scenario) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Classifier::from_toml(&text, scenario)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_toml().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse;

    fn branch(text: &str) -> Branch {
        Branch {
            formula: parse(text).unwrap(),
            input: 0,
            input_value: DVector::zeros(1),
            margin: 1.0,
            samples: 1,
        }
    }

    #[test]
    fn partition_detection() {
        assert!(structural_partition(&[branch("true")]));
        assert!(structural_partition(&[branch("P[0,1) a"), branch("!P[0,1) a")]));
        assert!(structural_partition(&[
            branch("P[0,1) a & H[0,2) b"),
            branch("P[0,1) a & !H[0,2) b"),
            branch("!P[0,1) a"),
        ]));
        assert!(!structural_partition(&[branch("P[0,1) a"), branch("!P[0,2) a")]));
        assert!(!structural_partition(&[
            branch("P[0,1) a & H[0,2) b"),
            branch("!P[0,1) a")
        ]));
        assert!(!structural_partition(&[branch("true"), branch("P[0,1) a")]));
    }
}
