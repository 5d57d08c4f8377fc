use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::logic::metric::Metric;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `{s : w.s >= c}`
    Halfspace { weights: DVector<f64>, offset: f64 },
    /// Axis-aligned box; bounds may be infinite.
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicPredicate {
    name: String,
    shape: Shape,
}

impl AtomicPredicate {
    pub fn new(name: impl Into<String>, shape: Shape) -> Result<Self> {
        let name = name.into();
        let bad = |msg: &str| Error::Predicate {
            name: name.clone(),
            msg: msg.to_string(),
        };
        match &shape {
            Shape::Halfspace { weights, offset } => {
                if weights.is_empty() {
                    return Err(bad("empty weight vector"));
                }
                if weights.iter().all(|w| *w == 0.0) {
                    return Err(bad("weight vector is zero"));
                }
                if weights.iter().any(|w| !w.is_finite()) || !offset.is_finite() {
                    return Err(bad("non-finite halfspace coefficients"));
                }
            }
            Shape::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(bad("box bounds must be non-empty and of equal length"));
                }
                for (i, (lo, hi)) in lower.iter().zip(upper).enumerate() {
                    if lo.is_nan() || hi.is_nan() || lo > hi || *lo == f64::INFINITY || *hi == f64::NEG_INFINITY {
                        return Err(bad(&format!("invalid bounds on coordinate {i}")));
                    }
                }
            }
        }
        Ok(AtomicPredicate { name, shape })
    }

    pub fn halfspace(name: impl Into<String>, weights: Vec<f64>, offset: f64) -> Result<Self> {
        AtomicPredicate::new(
            name,
            Shape::Halfspace {
                weights: DVector::from_vec(weights),
                offset,
            },
        )
    }

    pub fn boxed(name: impl Into<String>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        AtomicPredicate::new(name, Shape::Box { lower, upper })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Halfspace { weights, .. } => weights.len(),
            Shape::Box { lower, .. } => lower.len(),
        }
    }

    /// Closed-set membership.
    pub fn contains(&self, point: &DVector<f64>) -> bool {
        match &self.shape {
            Shape::Halfspace { weights, offset } => weights.dot(point) - offset >= 0.0,
            Shape::Box { lower, upper } => point
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(s, (lo, hi))| lo <= s && s <= hi),
        }
    }

    /// Signed distance: depth inside the set, minus the distance outside.
    pub fn signed_distance(&self, point: &DVector<f64>, metric: &Metric) -> Result<f64> {
        if point.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: point.len(),
            });
        }
        metric.check_dim(point.len())?;
        match &self.shape {
            Shape::Halfspace { weights, offset } => Ok((weights.dot(point) - offset) / metric.dual_norm(weights)),
            Shape::Box { lower, upper } => {
                if !metric.is_diagonal() {
                    return Err(Error::Predicate {
                        name: self.name.clone(),
                        msg: "box predicates require a diagonal metric".into(),
                    });
                }
                Ok(box_signed_distance(point, lower, upper, metric))
            }
        }
    }

    pub(crate) fn validate_against(&self, metric: &Metric) -> Result<()> {
        metric.check_dim(self.dim())?;
        if matches!(self.shape, Shape::Box { .. }) && !metric.is_diagonal() {
            return Err(Error::Predicate {
                name: self.name.clone(),
                msg: "box predicates require a diagonal metric".into(),
            });
        }
        Ok(())
    }
}

fn box_signed_distance(point: &DVector<f64>, lower: &[f64], upper: &[f64], metric: &Metric) -> f64 {
    let mut outside_sq = 0.0;
    let mut inside = true;
    for (i, s) in point.iter().enumerate() {
        let excess = (lower[i] - s).max(s - upper[i]);
        if excess > 0.0 {
            inside = false;
            outside_sq += metric.diag(i) * excess * excess;
        }
    }
    if !inside {
        return -outside_sq.sqrt();
    }
    // Depth is the distance to the nearest face; infinite faces never bind.
    let mut depth = f64::INFINITY;
    for (i, s) in point.iter().enumerate() {
        let w = metric.diag(i).sqrt();
        if lower[i].is_finite() {
            depth = depth.min(w * (s - lower[i]));
        }
        if upper[i].is_finite() {
            depth = depth.min(w * (upper[i] - s));
        }
    }
    depth
}

/// Named predicates over a common signal space.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateMap {
    dim: usize,
    entries: BTreeMap<String, AtomicPredicate>,
}

impl PredicateMap {
    pub fn new(dim: usize) -> Self {
        PredicateMap {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_predicates(dim: usize, preds: impl IntoIterator<Item = AtomicPredicate>) -> Result<Self> {
        let mut map = PredicateMap::new(dim);
        for p in preds {
            map.insert(p)?;
        }
        Ok(map)
    }

    pub fn insert(&mut self, pred: AtomicPredicate) -> Result<()> {
        if pred.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: pred.dim(),
            });
        }
        if self.entries.contains_key(pred.name()) {
            return Err(Error::Predicate {
                name: pred.name().to_string(),
                msg: "duplicate predicate name".into(),
            });
        }
        self.entries.insert(pred.name().to_string(), pred);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, name: &str) -> Option<&AtomicPredicate> {
        self.entries.get(name)
    }

    pub fn lookup(&self, name: &str) -> Result<&AtomicPredicate> {
        self.get(name).ok_or_else(|| Error::UnknownAtom(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &AtomicPredicate> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate_against(&self, metric: &Metric) -> Result<()> {
        self.entries.values().try_for_each(|p| p.validate_against(metric))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn box_examples_1d() {
        let m = Metric::identity(1);
        let b = AtomicPredicate::boxed("b", vec![2.0], vec![5.0]).unwrap();
        assert_eq!(b.signed_distance(&v(&[1.0]), &m).unwrap(), -1.0);
        assert_eq!(b.signed_distance(&v(&[2.0]), &m).unwrap(), 0.0);
        assert!(b.contains(&v(&[2.0])));
        assert_eq!(b.signed_distance(&v(&[3.0]), &m).unwrap(), 1.0);
        assert_eq!(b.signed_distance(&v(&[4.5]), &m).unwrap(), 0.5);
    }

    #[test]
    fn halfspace_example() {
        let m = Metric::identity(1);
        let h = AtomicPredicate::halfspace("h", vec![1.0], 2.0).unwrap();
        assert_eq!(h.signed_distance(&v(&[3.0]), &m).unwrap(), 1.0);
        assert_eq!(h.signed_distance(&v(&[0.0]), &m).unwrap(), -2.0);
    }

    #[test]
    fn unbounded_box_has_infinite_depth() {
        let m = Metric::identity(2);
        let b = AtomicPredicate::boxed("all", vec![f64::NEG_INFINITY; 2], vec![f64::INFINITY; 2]).unwrap();
        assert_eq!(b.signed_distance(&v(&[3.0, -1.0]), &m).unwrap(), f64::INFINITY);
    }

    #[test]
    fn box_outside_corner_uses_weighted_euclidean_excess() {
        let m = Metric::diagonal(&[4.0, 1.0]).unwrap();
        let b = AtomicPredicate::boxed("b", vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let d = b.signed_distance(&v(&[2.0, 3.0]), &m).unwrap();
        assert!((d + (4.0f64 * 1.0 + 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn validation_errors() {
        assert!(AtomicPredicate::halfspace("z", vec![0.0, 0.0], 1.0).is_err());
        assert!(AtomicPredicate::boxed("b", vec![1.0], vec![0.0]).is_err());
        let full = Metric::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let b = AtomicPredicate::boxed("b", vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(b.signed_distance(&v(&[0.5, 0.5]), &full).is_err());
        let h = AtomicPredicate::halfspace("h", vec![1.0, 0.0], 0.0).unwrap();
        assert!(h.signed_distance(&v(&[0.5]), &Metric::identity(1)).is_err());
        let mut map = PredicateMap::new(2);
        map.insert(h.clone()).unwrap();
        assert!(map.insert(h).is_err());
        assert!(map
            .insert(AtomicPredicate::halfspace("x", vec![1.0], 0.0).unwrap())
            .is_err());
    }
}
