//! Seeded random instances (formulas, traces, predicate maps, metrics) for
//! property checks and the acceptance suite.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::logic::{AtomicPredicate, Formula, Metric, PredicateMap};
use crate::time::{Bound, Interval, Time};
use crate::trace::{default_names, TimedTrace};

/// Atom names produced by [`predicate_map`].
pub const ATOMS: [&str; 3] = ["a", "b", "c"];

/// Random symmetric positive definite matrix with eigenvalues in [0.25, 4).
pub fn pd_matrix(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
    let d = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(0.25..4.0)));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

pub fn metric(rng: &mut impl Rng, n: usize, diagonal: bool) -> Metric {
    if diagonal {
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.25..4.0)).collect();
        Metric::diagonal(&w).expect("positive weights")
    } else {
        Metric::new(pd_matrix(rng, n)).expect("positive definite")
    }
}

pub fn halfspace(rng: &mut impl Rng, name: &str, n: usize) -> AtomicPredicate {
    loop {
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        if w.iter().map(|x| x * x).sum::<f64>() > 0.01 {
            return AtomicPredicate::halfspace(name, w, rng.random_range(-2.0..2.0)).expect("valid halfspace");
        }
    }
}

/// Box with finite bounds on at least one coordinate.
pub fn boxed(rng: &mut impl Rng, name: &str, n: usize) -> AtomicPredicate {
    let finite = rng.random_range(0..n);
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for i in 0..n {
        let lo = rng.random_range(-2.0..1.0);
        let hi = lo + rng.random_range(0.2..3.0);
        let open = i != finite && rng.random_bool(0.25);
        lower.push(if open && rng.random_bool(0.5) {
            f64::NEG_INFINITY
        } else {
            lo
        });
        upper.push(if open { f64::INFINITY } else { hi });
    }
    AtomicPredicate::boxed(name, lower, upper).expect("valid box")
}

/// Halfspaces `a` and `c` and a predicate `b` over `n` dimensions; `b` is a
/// box when the metric is diagonal (boxes need one), else a halfspace.
pub fn predicate_map(rng: &mut impl Rng, n: usize, diagonal: bool) -> PredicateMap {
    let a = halfspace(rng, "a", n);
    let b = if diagonal {
        boxed(rng, "b", n)
    } else {
        halfspace(rng, "b", n)
    };
    let c = halfspace(rng, "c", n);
    PredicateMap::from_predicates(n, [a, b, c]).expect("distinct names")
}

/// Trace of `len` points starting at 0 with steps of 1/2, 1 or 3/2 and
/// states uniform in `[-3, 3]^n`.
pub fn trace(rng: &mut impl Rng, n: usize, len: usize) -> TimedTrace {
    let mut t = Time::ZERO;
    let mut times = Vec::with_capacity(len);
    for _ in 0..len {
        times.push(t);
        t = t + Time::new(rng.random_range(1..=3), 2);
    }
    let states = (0..len)
        .map(|_| DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0)))
        .collect();
    TimedTrace::new(default_names("s", n), times, states).expect("increasing times")
}

pub fn interval(rng: &mut impl Rng) -> Interval {
    let lo = Time::new(rng.random_range(0..6), 2);
    let hi = if rng.random_bool(0.1) {
        Bound::Infinite
    } else {
        Bound::Finite(lo + Time::new(rng.random_range(1..8), 2))
    };
    Interval::new(lo, hi).expect("lo below hi")
}

/// Formula of depth at most `depth` over [`ATOMS`], mixing past and future
/// operators unless `past_only`.
pub fn formula(rng: &mut impl Rng, depth: usize, past_only: bool) -> Formula {
    if depth <= 1 || rng.random_bool(0.2) {
        return match rng.random_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            i => Formula::atom(ATOMS[i % ATOMS.len()]),
        };
    }
    let sub = |rng: &mut _| formula(rng, depth - 1, past_only);
    let choice = if past_only {
        [0, 1, 2, 4, 7, 8][rng.random_range(0..6)]
    } else {
        rng.random_range(0..9)
    };
    match choice {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::until(interval(rng), sub(rng), sub(rng)),
        4 => Formula::since(interval(rng), sub(rng), sub(rng)),
        5 => Formula::eventually(interval(rng), sub(rng)),
        6 => Formula::always(interval(rng), sub(rng)),
        7 => Formula::once(interval(rng), sub(rng)),
        _ => Formula::historically(interval(rng), sub(rng)),
    }
}

/// Trace with every state moved by a random vector of metric length below
/// `radius`.
pub fn perturb(rng: &mut impl Rng, x: &TimedTrace, metric: &Metric, radius: f64) -> TimedTrace {
    x.map_states(x.names().to_vec(), |s| {
        let d = crate::sampling::unit_direction(rng, metric);
        s + d * (radius * rng.random::<f64>())
    })
    .expect("same shape")
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..300 {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    f(lo).min(f(hi)).min(fa).min(fb)
}

/// Signed distance in the plane found numerically: minimize the metric
/// distance to each boundary line or face segment by golden-section search,
/// positive inside. Independent of the closed forms it checks.
pub fn numeric_signed_distance(p: &AtomicPredicate, point: &DVector<f64>, metric: &Metric) -> f64 {
    use crate::logic::Shape;
    assert_eq!(point.len(), 2, "numeric oracle is planar");
    const FAR: f64 = 1e3;
    let dist = |y: DVector<f64>| metric.distance(point, &y);
    let d = match p.shape() {
        Shape::Halfspace { weights, offset } => {
            let y0 = weights * (*offset / weights.norm_squared());
            let v = DVector::from_vec(vec![-weights[1], weights[0]]) / weights.norm();
            golden_min(|s| dist(&y0 + &v * s), -FAR, FAR)
        }
        Shape::Box { lower, upper } => {
            let mut best = f64::INFINITY;
            for i in 0..2 {
                let j = 1 - i;
                let (lo, hi) = (lower[j].max(-FAR), upper[j].min(FAR));
                for bound in [lower[i], upper[i]] {
                    if !bound.is_finite() {
                        continue;
                    }
                    let seg = |s: f64| {
                        let mut y = DVector::zeros(2);
                        y[i] = bound;
                        y[j] = s;
                        dist(y)
                    };
                    best = best.min(golden_min(seg, lo, hi));
                }
            }
            best
        }
    };
    if p.contains(point) {
        d
    } else {
        -d
    }
}
