//! Sampling-based verification of the closed loop around the demonstrations,
//! with per-sample environment certificates and a falsification search.

mod falsify;
mod problem;

use std::fmt;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

pub use falsify::{falsify, FalsificationResult, FalsifyOptions};
pub use problem::{SamplePoint, Tube, VerificationProblem};

use crate::closed_loop::{ClosedLoop, SimulationResult};
use crate::error::Result;
use crate::inference::Classifier;
use crate::logic::eval_boolean;
use crate::scenario::Scenario;
use crate::trace::TimedTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    VerifiedSampled,
    Falsified,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::VerifiedSampled => "verified-sampled",
            Verdict::Falsified => "falsified",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Outcome of one sampled closed-loop run. `r_cert` bounds environment
/// perturbations (state held fixed) that keep the branch sequence and the
/// verdict; it is zero for counterexamples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleCertificate {
    pub index: usize,
    pub demo: usize,
    pub x0: Vec<f64>,
    pub robustness: f64,
    pub satisfied: bool,
    /// Smallest |robustness| of any branch formula at the visited locations.
    pub decision_margin: f64,
    pub transition_margin: f64,
    pub r_cert: f64,
}

impl SampleCertificate {
    pub fn is_counterexample(&self) -> bool {
        !self.satisfied || self.robustness < 0.0
    }
}

/// A violating point, re-simulated and re-checked independently of the
/// search that produced it.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub source: &'static str,
    pub demo: usize,
    pub x0: DVector<f64>,
    pub h: TimedTrace,
    pub result: SimulationResult,
    /// `eval_boolean` of the specification on the re-simulated run is false.
    pub confirmed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Coverage {
    /// Samples with a positive certified radius.
    pub certified_samples: usize,
    pub certified_fraction: f64,
    pub min_r_cert: f64,
    /// Mean of `min(r_cert / r_e, 1)`; 1 when the tube radius is zero.
    pub mean_tube_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub certified: bool,
    pub x0_radius: f64,
    pub tube_radius: f64,
    pub horizon: usize,
    pub seed: u64,
    pub samples: Vec<SampleCertificate>,
    pub min_robustness: f64,
    pub coverage: Coverage,
    pub counterexamples: Vec<Counterexample>,
    pub falsification: Option<FalsificationResult>,
}

fn decide(samples: &[SampleCertificate], counterexamples: &[Counterexample]) -> Verdict {
    if !counterexamples.is_empty() {
        Verdict::Falsified
    } else if samples.iter().all(|s| s.robustness > 0.0) {
        Verdict::VerifiedSampled
    } else {
        Verdict::Inconclusive
    }
}

impl VerificationReport {
    /// Fold in a falsification run; a counterexample it found flips the
    /// verdict.
    pub fn with_falsification(mut self, result: FalsificationResult) -> Self {
        if let Some(c) = &result.counterexample {
            self.counterexamples.push(c.clone());
        }
        self.verdict = decide(&self.samples, &self.counterexamples);
        self.falsification = Some(result);
        self
    }

    /// Report as TOML with a stable key order. Wall time is deliberately
    /// left out so that reruns are byte-identical.
    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct CexFile {
            source: &'static str,
            demo: usize,
            x0: Vec<f64>,
            robustness: f64,
            confirmed: bool,
        }
        #[derive(Serialize)]
        struct File<'a> {
            verdict: String,
            certified: bool,
            x0_radius: f64,
            tube_radius: f64,
            horizon: usize,
            seed: u64,
            samples: usize,
            counterexamples: usize,
            min_robustness: f64,
            coverage: &'a Coverage,
            #[serde(skip_serializing_if = "Option::is_none")]
            falsification: Option<&'a FalsificationResult>,
            counterexample: Vec<CexFile>,
            sample: &'a [SampleCertificate],
        }
        let file = File {
            verdict: self.verdict.to_string(),
            certified: self.certified,
            x0_radius: self.x0_radius,
            tube_radius: self.tube_radius,
            horizon: self.horizon,
            seed: self.seed,
            samples: self.samples.len(),
            counterexamples: self.counterexamples.len(),
            min_robustness: self.min_robustness,
            coverage: &self.coverage,
            falsification: self.falsification.as_ref(),
            counterexample: self
                .counterexamples
                .iter()
                .map(|c| CexFile {
                    source: c.source,
                    demo: c.demo,
                    x0: c.x0.iter().copied().collect(),
                    robustness: c.result.robustness,
                    confirmed: c.confirmed,
                })
                .collect(),
            sample: &self.samples,
        };
        toml::to_string(&file).expect("report serializes")
    }
}

/// Run one point of the problem through the closed loop.
pub fn simulate_point(
    problem: &VerificationProblem,
    cl: &ClosedLoop<'_>,
    demo: usize,
    x0: &DVector<f64>,
    h: &TimedTrace,
) -> Result<SimulationResult> {
    cl.simulate(x0, h, problem.tubes[demo].start, problem.horizon)
}

/// Re-simulate from scratch and re-evaluate the specification.
pub fn confirm_counterexample(
    problem: &VerificationProblem,
    cl: &ClosedLoop<'_>,
    source: &'static str,
    demo: usize,
    x0: DVector<f64>,
    h: TimedTrace,
) -> Result<Counterexample> {
    let result = simulate_point(problem, cl, demo, &x0, &h)?;
    let sc = cl.scenario;
    let confirmed = !eval_boolean(&sc.formula, &result.q, 0, &sc.predicates, &sc.spec_metric)?;
    Ok(Counterexample {
        source,
        demo,
        x0,
        h,
        result,
        confirmed,
    })
}

fn certificate(
    point: &SamplePoint,
    cl: &ClosedLoop<'_>,
    result: &SimulationResult,
    problem: &VerificationProblem,
) -> Result<SampleCertificate> {
    // Smallest |robustness| over every branch of the active location, so
    // that no branch formula changes truth value below it. Rows before
    // `start` are history.
    let start = problem.tubes[point.demo].start;
    let table = cl.branch_table(&point.h)?;
    let mut m_run = f64::INFINITY;
    for (k, d) in result.decisions.iter().enumerate() {
        let entry = cl
            .classifier
            .locations
            .iter()
            .position(|l| l.location == d.location)
            .expect("location was selectable");
        for series in &table.robustness[entry] {
            m_run = m_run.min(series[start + k].abs());
        }
    }
    let g_run = result.run.min_transition_margin();
    let l_h = cl.scenario.spec_map.l_h();
    let counterexample = !result.satisfied || result.robustness < 0.0;
    let r_cert = if counterexample || result.robustness <= 0.0 {
        0.0
    } else {
        m_run.min(g_run / l_h).min(result.robustness / l_h)
    };
    Ok(SampleCertificate {
        index: point.index,
        demo: point.demo,
        x0: point.x0.iter().copied().collect(),
        robustness: result.robustness,
        satisfied: result.satisfied,
        decision_margin: m_run,
        transition_margin: g_run,
        r_cert,
    })
}

/// Draw `problem.samples` points, simulate each, and certify the
/// environment neighbourhood of every satisfying run.
pub fn verify_sampling(
    problem: &VerificationProblem,
    classifier: &Classifier,
    scenario: &Scenario,
) -> Result<VerificationReport> {
    problem.validate(classifier, scenario)?;
    let cl = ClosedLoop::new(scenario, classifier)?;
    let runs: Vec<(SamplePoint, SimulationResult, SampleCertificate)> = (0..problem.samples)
        .into_par_iter()
        .map(|i| {
            let point = problem.sample(i, scenario)?;
            let result = simulate_point(problem, &cl, point.demo, &point.x0, &point.h)?;
            let cert = certificate(&point, &cl, &result, problem)?;
            Ok((point, result, cert))
        })
        .collect::<Result<_>>()?;

    let mut counterexamples = Vec::new();
    for (point, _, cert) in &runs {
        if cert.is_counterexample() {
            counterexamples.push(confirm_counterexample(
                problem,
                &cl,
                "sample",
                point.demo,
                point.x0.clone(),
                point.h.clone(),
            )?);
        }
    }
    let samples: Vec<SampleCertificate> = runs.into_iter().map(|(_, _, c)| c).collect();
    let certified_samples = samples.iter().filter(|s| s.r_cert > 0.0).count();
    let tube_fraction = |s: &SampleCertificate| {
        if problem.tube_radius > 0.0 {
            (s.r_cert / problem.tube_radius).min(1.0)
        } else {
            1.0
        }
    };
    let coverage = Coverage {
        certified_samples,
        certified_fraction: certified_samples as f64 / samples.len() as f64,
        min_r_cert: samples.iter().map(|s| s.r_cert).fold(f64::INFINITY, f64::min),
        mean_tube_fraction: samples.iter().map(tube_fraction).sum::<f64>() / samples.len() as f64,
    };
    Ok(VerificationReport {
        verdict: decide(&samples, &counterexamples),
        certified: problem.certified,
        x0_radius: problem.x0_radius,
        tube_radius: problem.tube_radius,
        horizon: problem.horizon,
        seed: problem.seed,
        min_robustness: samples.iter().map(|s| s.robustness).fold(f64::INFINITY, f64::min),
        samples,
        coverage,
        counterexamples,
        falsification: None,
    })
}
