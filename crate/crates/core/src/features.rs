//! Affine feature maps: the environment map `H` and the specification map
//! `Q(x, h)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::logic::Metric;
use crate::plant::matvec;
use crate::trace::TimedTrace;

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureKind {
    /// Coordinate selection; values are copied exactly.
    Select(Vec<usize>),
    Affine,
}

/// `v -> C v + d` with a declared Lipschitz constant.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    kind: FeatureKind,
    matrix: DMatrix<f64>,
    offset: DVector<f64>,
    lipschitz: f64,
}

impl FeatureMap {
    pub fn select(
        indices: Vec<usize>,
        input_dim: usize,
        lipschitz: f64,
        input: &Metric,
        output: &Metric,
    ) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::FeatureMap("selection is empty".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= input_dim) {
            return Err(Error::FeatureMap(format!(
                "index {bad} out of range for input dimension {input_dim}"
            )));
        }
        let mut c = DMatrix::zeros(indices.len(), input_dim);
        for (row, &i) in indices.iter().enumerate() {
            c[(row, i)] = 1.0;
        }
        let map = FeatureMap {
            kind: FeatureKind::Select(indices.clone()),
            offset: DVector::zeros(indices.len()),
            matrix: c,
            lipschitz,
        };
        map.validate(input, output)?;
        Ok(map)
    }

    pub fn affine(
        matrix: DMatrix<f64>,
        offset: DVector<f64>,
        lipschitz: f64,
        input: &Metric,
        output: &Metric,
    ) -> Result<Self> {
        if matrix.nrows() != offset.len() {
            return Err(Error::FeatureMap(format!(
                "offset has {} entries for a matrix with {} rows",
                offset.len(),
                matrix.nrows()
            )));
        }
        if matrix.iter().chain(offset.iter()).any(|v| !v.is_finite()) {
            return Err(Error::FeatureMap("coefficients must be finite".into()));
        }
        let map = FeatureMap {
            kind: FeatureKind::Affine,
            matrix,
            offset,
            lipschitz,
        };
        map.validate(input, output)?;
        Ok(map)
    }

    fn validate(&self, input: &Metric, output: &Metric) -> Result<()> {
        if input.dim() != self.input_dim() || output.dim() != self.output_dim() {
            return Err(Error::FeatureMap(format!(
                "metrics of dimension {} -> {} do not fit a {} -> {} map",
                input.dim(),
                output.dim(),
                self.input_dim(),
                self.output_dim()
            )));
        }
        if !(self.lipschitz.is_finite() && self.lipschitz >= 0.0) {
            return Err(Error::FeatureMap(format!(
                "Lipschitz constant {} is invalid",
                self.lipschitz
            )));
        }
        let norm = Metric::operator_norm(&self.matrix, input, output);
        if self.lipschitz < norm * (1.0 - 1e-12) {
            return Err(Error::FeatureMap(format!(
                "declared Lipschitz constant {} is below the operator norm {norm}",
                self.lipschitz
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> &FeatureKind {
        &self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: v.len(),
            });
        }
        Ok(match &self.kind {
            FeatureKind::Select(idx) => DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i])),
            FeatureKind::Affine => matvec(&self.matrix, v) + &self.offset,
        })
    }

    /// Operator norm of the columns `cols` of the linear part.
    pub fn block_norm(&self, cols: std::ops::Range<usize>, input: &Metric, output: &Metric) -> Result<f64> {
        if cols.end > self.input_dim() || input.dim() != cols.len() || output.dim() != self.output_dim() {
            return Err(Error::FeatureMap("block does not fit the map".into()));
        }
        let block = self.matrix.columns(cols.start, cols.len()).clone_owned();
        Ok(Metric::operator_norm(&block, input, output))
    }
}

/// Apply `map` to every sample of `trace`.
pub fn apply_feature_map(map: &FeatureMap, trace: &TimedTrace, names: Vec<String>) -> Result<TimedTrace> {
    let states = trace
        .states()
        .iter()
        .map(|s| map.apply(s))
        .collect::<Result<Vec<_>>>()?;
    TimedTrace::new(names, trace.times().to_vec(), states)
}

/// `Q(x, h)` over the stacked state and environment features, with its block
/// Lipschitz constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecMap {
    map: FeatureMap,
    state_dim: usize,
    l_x: f64,
    l_h: f64,
}

impl SpecMap {
    pub fn new(map: FeatureMap, state_metric: &Metric, feature_metric: &Metric, output: &Metric) -> Result<Self> {
        let n = state_metric.dim();
        let p = feature_metric.dim();
        if map.input_dim() != n + p {
            return Err(Error::FeatureMap(format!(
                "specification map takes {} inputs, expected {} state + {} feature coordinates",
                map.input_dim(),
                n,
                p
            )));
        }
        let l_x = map.block_norm(0..n, state_metric, output)?;
        let l_h = map.block_norm(n..n + p, feature_metric, output)?;
        Ok(SpecMap {
            map,
            state_dim: n,
            l_x,
            l_h,
        })
    }

    pub fn map(&self) -> &FeatureMap {
        &self.map
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn feature_dim(&self) -> usize {
        self.map.input_dim() - self.state_dim
    }

    pub fn output_dim(&self) -> usize {
        self.map.output_dim()
    }

    pub fn l_x(&self) -> f64 {
        self.l_x
    }

    pub fn l_h(&self) -> f64 {
        self.l_h
    }

    pub fn apply(&self, x: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.state_dim {
            return Err(Error::Dimension {
                expected: self.state_dim,
                got: x.len(),
            });
        }
        let stacked = DVector::from_iterator(x.len() + h.len(), x.iter().chain(h.iter()).copied());
        self.map.apply(&stacked)
    }
}

/// Index in `h` of the sample taken at the first time of `agent`, checking
/// that every later agent time is matched one-to-one.
pub fn env_offset(agent: &TimedTrace, h: &TimedTrace) -> Result<usize> {
    let start = h
        .index_of_time(agent.time(0))
        .ok_or_else(|| Error::TraceMismatch(format!("environment has no sample at t = {}", agent.time(0))))?;
    if start + agent.len() > h.len() {
        return Err(Error::TraceMismatch(format!(
            "environment ends before the agent trace ({} samples after t = {}, need {})",
            h.len() - start,
            agent.time(0),
            agent.len()
        )));
    }
    for k in 0..agent.len() {
        if agent.time(k) != h.time(start + k) {
            return Err(Error::TraceMismatch(format!(
                "agent time {} does not match environment time {} at step {k}",
                agent.time(k),
                h.time(start + k)
            )));
        }
    }
    Ok(start)
}

/// `q(k) = Q(x(k), h(k))`, pairing samples by timestamp.
pub fn build_q_trace(agent: &TimedTrace, h: &TimedTrace, qmap: &SpecMap, names: Vec<String>) -> Result<TimedTrace> {
    if agent.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let off = env_offset(agent, h)?;
    let states = (0..agent.len())
        .map(|k| qmap.apply(agent.state(k), h.state(off + k)))
        .collect::<Result<Vec<_>>>()?;
    TimedTrace::new(names, agent.times().to_vec(), states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Time;
    use crate::trace::default_names;

    fn relative() -> SpecMap {
        let c = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0,
            ],
        );
        let map = FeatureMap::affine(c, DVector::zeros(4), 1.7, &Metric::identity(4), &Metric::identity(4)).unwrap();
        SpecMap::new(map, &Metric::identity(2), &Metric::identity(2), &Metric::identity(4)).unwrap()
    }

    #[test]
    fn lipschitz_validation() {
        let c = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        let id = Metric::identity(2);
        let out = Metric::identity(1);
        assert!(FeatureMap::affine(c.clone(), DVector::zeros(1), 4.9, &id, &out).is_err());
        assert!(FeatureMap::affine(c, DVector::zeros(1), 5.0, &id, &out).is_ok());
        assert!(FeatureMap::select(vec![2], 2, 1.0, &id, &out).is_err());
    }

    #[test]
    fn block_constants() {
        let q = relative();
        assert!((q.l_x() - 2f64.sqrt()).abs() < 1e-12);
        assert!((q.l_h() - 1.0).abs() < 1e-12);
        let v = q
            .apply(&DVector::from_vec(vec![1.0, 2.0]), &DVector::from_vec(vec![0.5, 4.0]))
            .unwrap();
        assert_eq!(v.as_slice(), &[1.0, 2.0, 0.5, -2.0]);
    }

    #[test]
    fn q_trace_aligns_on_time() {
        let times: Vec<Time> = (-2..=2).map(Time::from_integer).collect();
        let h = TimedTrace::unnamed(times, (0..5).map(|i| DVector::from_vec(vec![i as f64, 0.0])).collect()).unwrap();
        let agent = TimedTrace::unnamed((0..=2).map(Time::from_integer).collect(), vec![DVector::zeros(2); 3]).unwrap();
        let q = build_q_trace(&agent, &h, &relative(), default_names("q", 4)).unwrap();
        assert_eq!(q.state(0)[2], -2.0);
        assert_eq!(q.state(2)[2], -4.0);
        let long = TimedTrace::unnamed((0..=3).map(Time::from_integer).collect(), vec![DVector::zeros(2); 4]).unwrap();
        assert!(build_q_trace(&long, &h, &relative(), default_names("q", 4)).is_err());
    }
}
