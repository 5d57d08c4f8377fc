use nalgebra::DVector;
use rand::Rng;

use crate::demos::DemonstrationSet;
use crate::error::{Error, Result};
use crate::inference::Classifier;
use crate::logic::required_horizon;
use crate::sampling::{halton, stream_rng, unit_direction};
use crate::scenario::Scenario;
use crate::time::Bound;
use crate::trace::TimedTrace;

/// Shrink factor keeping drawn radii strictly inside their balls.
pub(crate) const INSIDE: f64 = 1.0 - 1e-9;

/// Nominal environment feature trace with the row the run starts at.
#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    pub h: TimedTrace,
    pub start: usize,
}

/// Initial balls `B(x0_i, r)` (optionally clipped to a box), each paired with
/// the tube of radius `r_e` around the same demonstration's feature history.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationProblem {
    pub x0_centers: Vec<DVector<f64>>,
    pub x0_radius: f64,
    pub bounding_box: Option<(Vec<f64>, Vec<f64>)>,
    pub tubes: Vec<Tube>,
    pub tube_radius: f64,
    pub horizon: usize,
    pub samples: usize,
    pub seed: u64,
    /// Radii are within the classifier's certificate.
    pub certified: bool,
}

/// One drawn point of the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub index: usize,
    /// Demonstration whose ball and tube the point was drawn from.
    pub demo: usize,
    pub x0: DVector<f64>,
    /// Perturbed feature trace (history included).
    pub h: TimedTrace,
}

impl VerificationProblem {
    /// Problem over the classifier's training starts and environments with
    /// radii `scale` times the certified ones. Scales above 1 leave the
    /// certificate and mark the problem uncertified.
    pub fn from_classifier(
        classifier: &Classifier,
        demos: &DemonstrationSet,
        scenario: &Scenario,
        samples: usize,
        seed: u64,
        scale: f64,
    ) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::Problem(format!(
                "radius scale {scale} must be a non-negative number"
            )));
        }
        let p = VerificationProblem {
            x0_centers: classifier.initial_states.clone(),
            x0_radius: classifier.radii.delta_c * scale,
            bounding_box: None,
            tubes: demos
                .demos
                .iter()
                .map(|d| Tube {
                    h: d.h.clone(),
                    start: d.offset,
                })
                .collect(),
            tube_radius: classifier.radii.delta_e * scale,
            horizon: scenario.horizon,
            samples,
            seed,
            certified: scale <= 1.0,
        };
        p.validate(classifier, scenario)?;
        Ok(p)
    }

    pub fn validate(&self, classifier: &Classifier, scenario: &Scenario) -> Result<()> {
        classifier.check_fingerprint(scenario)?;
        if self.samples == 0 {
            return Err(Error::Problem("sample budget must be positive".into()));
        }
        if self.x0_centers.is_empty() || self.x0_centers.len() != self.tubes.len() {
            return Err(Error::Problem(format!(
                "{} initial states for {} environment tubes",
                self.x0_centers.len(),
                self.tubes.len()
            )));
        }
        if !(self.x0_radius.is_finite()
            && self.x0_radius >= 0.0
            && self.tube_radius.is_finite()
            && self.tube_radius >= 0.0)
        {
            return Err(Error::Problem("radii must be non-negative numbers".into()));
        }
        if self.x0_centers.iter().any(|x| x.len() != scenario.state_dim()) {
            return Err(Error::Problem("initial state dimension mismatch".into()));
        }
        if self.certified && (self.x0_radius > classifier.radii.delta_c || self.tube_radius > classifier.radii.delta_e)
        {
            return Err(Error::Problem(format!(
                "radii ({}, {}) exceed the certified ({}, {})",
                self.x0_radius, self.tube_radius, classifier.radii.delta_c, classifier.radii.delta_e
            )));
        }
        let need = required_horizon(&scenario.formula)?;
        if Bound::Finite(scenario.period.mul_int(self.horizon as i64)) < need {
            return Err(Error::Problem(format!(
                "horizon {} is shorter than the specification needs",
                self.horizon
            )));
        }
        for (i, t) in self.tubes.iter().enumerate() {
            if t.start + self.horizon >= t.h.len() || t.h.dim() != scenario.feature_dim() {
                return Err(Error::Problem(format!(
                    "environment tube {i} does not cover the horizon"
                )));
            }
        }
        if let Some((lo, hi)) = &self.bounding_box {
            if lo.len() != scenario.state_dim() || hi.len() != scenario.state_dim() {
                return Err(Error::Problem("bounding box dimension mismatch".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn in_box(&self, x: &DVector<f64>) -> bool {
        match &self.bounding_box {
            None => true,
            Some((lo, hi)) => x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| l <= v && v <= h),
        }
    }

    /// Draw sample `index`: Halton coordinates choose the demonstration and
    /// the radii, a per-sample stream supplies directions.
    pub fn sample(&self, index: usize, scenario: &Scenario) -> Result<SamplePoint> {
        let hidx = index as u64 + 1;
        let pick = |u: f64, n: usize| ((u * n as f64) as usize).min(n - 1);
        let demo = pick(halton(hidx, 2), self.x0_centers.len());
        let n = scenario.state_dim() as f64;
        // Radii strictly inside the balls.
        let rx = self.x0_radius * halton(hidx, 3).powf(1.0 / n) * INSIDE;
        let rc = halton(hidx, 5) * INSIDE;
        let mix = halton(hidx, 7);
        let mut rng = stream_rng(self.seed, index as u64);

        let c = &self.x0_centers[demo];
        let mut x0 = c.clone();
        for _ in 0..64 {
            let cand = c + unit_direction(&mut rng, &scenario.state_metric) * rx;
            if self.in_box(&cand) {
                x0 = cand;
                break;
            }
        }
        if !self.in_box(&x0) {
            return Err(Error::Problem(format!(
                "initial ball {demo} does not meet the bounding box"
            )));
        }

        let tube = &self.tubes[demo];
        let common = unit_direction(&mut rng, &scenario.feature_metric) * rc;
        let states = (0..tube.h.len())
            .map(|j| {
                let own = unit_direction(&mut rng, &scenario.feature_metric) * (rng.random::<f64>() * INSIDE);
                tube.h.state(j) + (&common * mix + own * (1.0 - mix)) * self.tube_radius
            })
            .collect();
        let h = TimedTrace::new(tube.h.names().to_vec(), tube.h.times().to_vec(), states)?;
        Ok(SamplePoint { index, demo, x0, h })
    }
}
