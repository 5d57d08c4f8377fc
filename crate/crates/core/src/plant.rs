//! Discrete-time linear plant with a finite input set.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::logic::Metric;
use crate::time::Time;
use crate::trace::{default_names, TimedTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    inputs: Vec<DVector<f64>>,
}

/// Row-major inner products, so results do not depend on the matrix backend.
pub(crate) fn matvec(m: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(m.nrows(), |i, _| {
        let mut s = 0.0;
        for j in 0..m.ncols() {
            s += m[(i, j)] * x[j];
        }
        s
    })
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, inputs: Vec<DVector<f64>>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::Plant(format!(
                "A must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() || b.ncols() == 0 {
            return Err(Error::Plant(format!(
                "B must have {} rows and at least one column, got {}x{}",
                a.nrows(),
                b.nrows(),
                b.ncols()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Plant("A and B must be finite".into()));
        }
        if inputs.is_empty() {
            return Err(Error::Plant("input set is empty".into()));
        }
        for (i, u) in inputs.iter().enumerate() {
            if u.len() != b.ncols() {
                return Err(Error::Plant(format!(
                    "input {i} has dimension {}, expected {}",
                    u.len(),
                    b.ncols()
                )));
            }
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::Plant(format!("input {i} is not finite")));
            }
            if inputs[..i].contains(u) {
                return Err(Error::Plant(format!("input {i} is listed twice")));
            }
        }
        Ok(LinearSystem { a, b, inputs })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn inputs(&self) -> &[DVector<f64>] {
        &self.inputs
    }

    /// Index of `u` in the input set (exact comparison).
    pub fn input_index(&self, u: &DVector<f64>) -> Result<usize> {
        self.inputs
            .iter()
            .position(|v| v == u)
            .ok_or_else(|| Error::InputNotInSet(format!("{:?}", u.as_slice())))
    }

    /// `A x + B u`.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.state_dim() {
            return Err(Error::Dimension {
                expected: self.state_dim(),
                got: x.len(),
            });
        }
        if u.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: u.len(),
            });
        }
        Ok(matvec(&self.a, x) + matvec(&self.b, u))
    }

    /// Apply `inputs` (elements of the input set) from `x0`; `times` holds one timestamp per state.
    pub fn simulate_open_loop(&self, x0: &DVector<f64>, inputs: &[DVector<f64>], times: &[Time]) -> Result<TimedTrace> {
        if times.len() != inputs.len() + 1 {
            return Err(Error::TraceMismatch(format!(
                "{} inputs need {} timestamps, got {}",
                inputs.len(),
                inputs.len() + 1,
                times.len()
            )));
        }
        if x0.len() != self.state_dim() {
            return Err(Error::Dimension {
                expected: self.state_dim(),
                got: x0.len(),
            });
        }
        let mut states = Vec::with_capacity(times.len());
        let mut x = x0.clone();
        for u in inputs {
            self.input_index(u)?;
            let next = self.step(&x, u)?;
            states.push(x);
            x = next;
        }
        states.push(x);
        TimedTrace::new(default_names("x", self.state_dim()), times.to_vec(), states)
    }

    /// `max_{0<=k<=horizon} ||A^k||` in the operator norm induced by `metric`.
    pub fn state_propagation_bound(&self, metric: &Metric, horizon: usize) -> Result<f64> {
        if metric.dim() != self.state_dim() {
            return Err(Error::Dimension {
                expected: self.state_dim(),
                got: metric.dim(),
            });
        }
        let n = self.state_dim();
        let mut power = DMatrix::identity(n, n);
        let mut best = 1.0f64;
        for _ in 0..horizon {
            power = &self.a * power;
            best = best.max(Metric::operator_norm(&power, metric, metric));
        }
        Ok(best)
    }
}

/// Uniform timestamps `start + k * period` for `k = 0..=steps`.
pub fn uniform_times(start: Time, period: Time, steps: usize) -> Vec<Time> {
    (0..=steps).map(|k| start + period.mul_int(k as i64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrator() -> LinearSystem {
        LinearSystem::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            vec![DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.0, 1.0])],
        )
        .unwrap()
    }

    #[test]
    fn open_loop_matches_hand_computation() {
        let sys = integrator();
        let u = vec![
            sys.inputs()[0].clone(),
            sys.inputs()[1].clone(),
            sys.inputs()[0].clone(),
        ];
        let tr = sys
            .simulate_open_loop(
                &DVector::zeros(2),
                &u,
                &uniform_times(Time::ZERO, Time::from_integer(1), 3),
            )
            .unwrap();
        assert_eq!(tr.state(3).as_slice(), &[2.0, 1.0]);
        assert_eq!(tr.len(), 4);
    }

    #[test]
    fn superposition() {
        let sys = LinearSystem::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.25]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            vec![DVector::from_vec(vec![1.0])],
        )
        .unwrap();
        let times = uniform_times(Time::ZERO, Time::from_integer(1), 5);
        let u = vec![sys.inputs()[0].clone(); 5];
        let zero_u = vec![DVector::zeros(1); 5];
        let sys_free = LinearSystem::new(sys.a().clone(), sys.b().clone(), vec![DVector::zeros(1)]).unwrap();
        let x0 = DVector::from_vec(vec![1.0, -2.0]);
        let full = sys.simulate_open_loop(&x0, &u, &times).unwrap();
        let free = sys_free.simulate_open_loop(&x0, &zero_u, &times).unwrap();
        let forced = sys.simulate_open_loop(&DVector::zeros(2), &u, &times).unwrap();
        for k in 0..=5 {
            assert!((full.state(k) - free.state(k) - forced.state(k)).amax() < 1e-12);
        }
    }

    #[test]
    fn propagation_bound() {
        let sys = integrator();
        assert!((sys.state_propagation_bound(&Metric::identity(2), 10).unwrap() - 1.0).abs() < 1e-12);
        let shear = LinearSystem::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            DMatrix::identity(2, 2),
            vec![DVector::zeros(2)],
        )
        .unwrap();
        for (scale, horizon, expected) in [(0.5, 3, 1.0), (2.0, 2, 4.0)] {
            let sys = LinearSystem::new(
                DMatrix::identity(2, 2) * scale,
                DMatrix::identity(2, 2),
                vec![DVector::zeros(2)],
            )
            .unwrap();
            let alpha = sys.state_propagation_bound(&Metric::identity(2), horizon).unwrap();
            assert!((alpha - expected).abs() < 1e-12);
        }
        // ||[[1,2],[0,1]]||_2 = 1 + sqrt(2)
        let alpha = shear.state_propagation_bound(&Metric::identity(2), 2).unwrap();
        assert!((alpha - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let sys = integrator();
        let bad = DVector::from_vec(vec![0.5, 0.0]);
        assert!(sys.input_index(&bad).is_err());
        let times = uniform_times(Time::ZERO, Time::from_integer(1), 1);
        assert!(matches!(
            sys.simulate_open_loop(&DVector::zeros(2), &[bad], &times),
            Err(Error::InputNotInSet(_))
        ));
        assert!(LinearSystem::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(3, 1),
            vec![DVector::zeros(1)]
        )
        .is_err());
    }
}
