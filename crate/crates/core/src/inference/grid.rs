use std::cmp::Ordering;
use std::fmt;

use nalgebra::DVector;

use crate::demos::Demonstration;
use crate::error::Result;
use crate::logic::{past_window, AtomicPredicate, Formula, Metric};
use crate::time::{Bound, Interval, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TemporalOp {
    Once,
    Historically,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Comparison {
    Ge,
    Le,
}

impl Comparison {
    pub fn tag(self) -> &'static str {
        match self {
            Comparison::Ge => "ge",
            Comparison::Le => "le",
        }
    }
}

/// `Op[a,b)(h_f cmp threshold)` with `a, b` in sampling periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub feature: usize,
    pub op: TemporalOp,
    pub cmp: Comparison,
    pub a: usize,
    pub b: usize,
    pub threshold: f64,
}

impl Primitive {
    /// Lexicographic tie-break key order.
    pub fn cmp_key(&self, other: &Primitive) -> Ordering {
        (self.feature, self.op, self.cmp, self.a, self.b)
            .cmp(&(other.feature, other.op, other.cmp, other.a, other.b))
            .then(self.threshold.total_cmp(&other.threshold))
    }

    /// Halfspace `h_f >= threshold` or `h_f <= threshold` in feature space.
    pub fn predicate(&self, name: &str, feature_dim: usize) -> Result<AtomicPredicate> {
        let sign = match self.cmp {
            Comparison::Ge => 1.0,
            Comparison::Le => -1.0,
        };
        let mut w = vec![0.0; feature_dim];
        w[self.feature] = sign;
        AtomicPredicate::halfspace(name, w, sign * self.threshold)
    }

    pub fn window(&self, period: Time) -> Interval {
        window(self.a, self.b, period)
    }

    pub fn formula(&self, atom: &str, period: Time) -> Formula {
        let a = Formula::atom(atom);
        match self.op {
            TemporalOp::Once => Formula::once(self.window(period), a),
            TemporalOp::Historically => Formula::historically(self.window(period), a),
        }
    }

    /// Robustness from the window aggregate `(max, min)` of `h_f`.
    pub fn robustness(&self, max: f64, min: f64, scale: f64) -> f64 {
        match (self.op, self.cmp) {
            (TemporalOp::Once, Comparison::Ge) => (max - self.threshold) / scale,
            (TemporalOp::Once, Comparison::Le) => (self.threshold - min) / scale,
            (TemporalOp::Historically, Comparison::Ge) => (min - self.threshold) / scale,
            (TemporalOp::Historically, Comparison::Le) => (self.threshold - max) / scale,
        }
    }
}

pub(crate) fn window(a: usize, b: usize, period: Time) -> Interval {
    Interval::new(period.mul_int(a as i64), Bound::Finite(period.mul_int(b as i64))).expect("a < b")
}

/// The aggregate a primitive thresholds: `max` for `Once >=` and
/// `Historically <=`, `min` otherwise.
pub(crate) fn uses_max(op: TemporalOp, cmp: Comparison) -> bool {
    matches!(
        (op, cmp),
        (TemporalOp::Once, Comparison::Ge) | (TemporalOp::Historically, Comparison::Le)
    )
}

/// Candidate features and windows; thresholds come from node samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveGrid {
    pub features: Vec<usize>,
    /// `(a, b)` in sampling periods, `0 <= a < b <= max_window`.
    pub windows: Vec<(usize, usize)>,
    pub period: Time,
    /// `||e_f||` in the dual feature metric, per feature index.
    pub scales: Vec<f64>,
}

impl PrimitiveGrid {
    pub fn new(features: Vec<usize>, max_window: usize, period: Time, metric: &Metric) -> Self {
        let mut windows = Vec::new();
        for a in 0..max_window {
            for b in a + 1..=max_window {
                windows.push((a, b));
            }
        }
        let scales = (0..metric.dim())
            .map(|f| {
                let mut e = DVector::zeros(metric.dim());
                e[f] = 1.0;
                metric.dual_norm(&e)
            })
            .collect();
        PrimitiveGrid {
            features,
            windows,
            period,
            scales,
        }
    }

    pub fn ops() -> [TemporalOp; 2] {
        [TemporalOp::Once, TemporalOp::Historically]
    }

    pub fn comparisons() -> [Comparison; 2] {
        [Comparison::Ge, Comparison::Le]
    }

    /// Window `(max, min)` of every grid feature at row `k` of `h`, laid out
    /// as `[feature][window]`.
    pub fn aggregates(&self, demo: &Demonstration, k: usize) -> Vec<(f64, f64)> {
        let times = demo.h.times();
        let mut out = Vec::with_capacity(self.features.len() * self.windows.len());
        for &f in &self.features {
            for &(a, b) in &self.windows {
                let iv = window(a, b, self.period);
                let mut hi = f64::NEG_INFINITY;
                let mut lo = f64::INFINITY;
                for j in past_window(times, k, &iv) {
                    let v = demo.h.state(j)[f];
                    hi = hi.max(v);
                    lo = lo.min(v);
                }
                out.push((hi, lo));
            }
        }
        out
    }
}

impl fmt::Display for PrimitiveGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let feats: Vec<String> = self.features.iter().map(|i| format!("h{}", i + 1)).collect();
        let wins: Vec<String> = self
            .windows
            .iter()
            .map(|&(a, b)| window(a, b, self.period).to_string())
            .collect();
        write!(
            f,
            "operators P,H; comparisons >=,<=; features {}; windows {}; thresholds at sample midpoints",
            feats.join(","),
            wins.join(" ")
        )
    }
}
