use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::trace::TimedTrace;

/// Weighted Euclidean metric `d(a, b) = sqrt((a-b)^T M (a-b))` with `M`
/// symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    m: DMatrix<f64>,
    m_inv: DMatrix<f64>,
    /// Upper Cholesky factor `R` with `M = R^T R`, so `d(a, b) = |R (a - b)|`.
    r: DMatrix<f64>,
    r_inv: DMatrix<f64>,
    diagonal: bool,
}

impl Metric {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Metric(format!(
                "matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Metric("matrix has non-finite entries".into()));
        }
        let n = m.nrows();
        let scale = m.amax().max(1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Metric(format!("matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        let chol = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Metric("matrix is not positive definite".into()))?;
        let r = chol.l().transpose();
        let m_inv = chol.inverse();
        let r_inv = r
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Metric("Cholesky factor is singular".into()))?;
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == 0.0));
        Ok(Metric {
            m,
            m_inv,
            r,
            r_inv,
            diagonal,
        })
    }

    pub fn identity(n: usize) -> Self {
        Metric::new(DMatrix::identity(n, n)).expect("identity is positive definite")
    }

    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        Metric::new(DMatrix::from_diagonal(&DVector::from_column_slice(weights)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.m[(i, i)]
    }

    /// `sqrt(v^T M v)`.
    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        (&self.r * v).norm()
    }

    pub fn distance(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        self.norm(&(a - b))
    }

    /// Dual norm `sqrt(w^T M^{-1} w)`; the distance from a point to the
    /// hyperplane `w.s = c` is `|w.s - c|` divided by this.
    pub fn dual_norm(&self, w: &DVector<f64>) -> f64 {
        w.dot(&(&self.m_inv * w)).sqrt()
    }

    /// Unit vector (in this metric) along which `w . v` grows fastest:
    /// `M^-1 w / ||w||_*`.
    pub fn steepest(&self, w: &DVector<f64>) -> DVector<f64> {
        (&self.m_inv * w) / self.dual_norm(w)
    }

    /// Map a vector of unit Euclidean length to one of unit metric length.
    pub fn from_euclidean(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.r_inv * v
    }

    /// Operator norm of `c` from `(R^n, input)` to `(R^m, output)`.
    pub fn operator_norm(c: &DMatrix<f64>, input: &Metric, output: &Metric) -> f64 {
        let scaled = &output.r * c * &input.r_inv;
        spectral_norm(&scaled)
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: n,
            });
        }
        Ok(())
    }
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

/// `d_O(a, b) = max_k d(a(k), b(k))` over traces with identical timestamps.
pub fn trace_distance(a: &TimedTrace, b: &TimedTrace, metric: &Metric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::TraceMismatch(format!(
            "lengths differ ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.times() != b.times() {
        return Err(Error::TraceMismatch("timestamps differ".into()));
    }
    metric.check_dim(a.dim())?;
    metric.check_dim(b.dim())?;
    Ok(a.states()
        .iter()
        .zip(b.states())
        .map(|(x, y)| metric.distance(x, y))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Time;

    #[test]
    fn rejects_non_pd_and_asymmetric() {
        assert!(Metric::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).is_err());
        assert!(Metric::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])).is_err());
        assert!(Metric::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).is_ok());
    }

    #[test]
    fn weighted_distance() {
        let m = Metric::diagonal(&[4.0, 1.0]).unwrap();
        let a = DVector::from_vec(vec![1.0, 0.0]);
        let b = DVector::from_vec(vec![0.0, 0.0]);
        assert_eq!(m.distance(&a, &b), 2.0);
    }

    #[test]
    fn trace_distance_examples() {
        let m = Metric::diagonal(&[4.0, 1.0]).unwrap();
        let one = |x: f64| {
            TimedTrace::new(
                vec!["a".into(), "b".into()],
                vec![Time::ZERO],
                vec![DVector::from_vec(vec![x, 0.0])],
            )
            .unwrap()
        };
        assert_eq!(trace_distance(&one(1.0), &one(0.0), &m).unwrap(), 2.0);
        assert_eq!(trace_distance(&one(1.0), &one(1.0), &m).unwrap(), 0.0);
    }

    #[test]
    fn single_index_shift_is_picked_by_max() {
        let m = Metric::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let times: Vec<Time> = (0..5).map(Time::from_integer).collect();
        let states: Vec<DVector<f64>> = (0..5).map(|k| DVector::from_vec(vec![k as f64, -(k as f64)])).collect();
        let a = TimedTrace::new(vec!["a".into(), "b".into()], times.clone(), states.clone()).unwrap();
        let v = DVector::from_vec(vec![0.3, -0.7]);
        let mut shifted = states;
        shifted[3] += &v;
        let b = TimedTrace::new(vec!["a".into(), "b".into()], times, shifted).unwrap();
        let d = trace_distance(&a, &b, &m).unwrap();
        let expected = v.dot(&(m.matrix() * &v)).sqrt();
        assert!((d - expected).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_of_identity_between_equal_metrics_is_one() {
        let m = Metric::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let c = DMatrix::identity(2, 2);
        assert!((Metric::operator_norm(&c, &m, &m) - 1.0).abs() < 1e-12);
    }
}
