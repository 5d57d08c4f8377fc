//! Scenario configuration: one TOML file that drives every command.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::automaton::{parse_sequential, SequentialSpec};
use crate::error::{Error, Result};
use crate::features::{apply_feature_map, build_q_trace, FeatureMap, SpecMap};
use crate::logic::{parse_formula, required_horizon, AtomicPredicate, Formula, Metric, PredicateMap, Shape};
use crate::plant::LinearSystem;
use crate::time::{Bound, Time};
use crate::trace::{default_names, TimedTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub spec: String,
    /// Pre-zero environment samples `D` every demonstration carries.
    pub history: usize,
    /// Dimension of the raw environment signal `y`.
    pub env_dim: usize,
    pub plant: PlantConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    pub env_map: MapConfig,
    pub spec_map: MapConfig,
    pub predicates: Vec<PredicateConfig>,
    pub inference: InferenceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    /// Sampling period as a decimal string.
    pub period: String,
    /// Closed-loop horizon `K` in steps.
    pub horizon: usize,
}

/// Metric matrices; omitted entries default to the identity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    pub state: Option<Vec<Vec<f64>>>,
    pub env: Option<Vec<Vec<f64>>>,
    pub env_features: Option<Vec<Vec<f64>>>,
    pub spec_features: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MapConfig {
    Select {
        indices: Vec<usize>,
        lipschitz: f64,
    },
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
        lipschitz: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PredicateConfig {
    Halfspace {
        name: String,
        weights: Vec<f64>,
        offset: f64,
    },
    Box {
        name: String,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl PredicateConfig {
    pub fn build(&self) -> Result<AtomicPredicate> {
        match self {
            PredicateConfig::Halfspace { name, weights, offset } => {
                AtomicPredicate::halfspace(name, weights.clone(), *offset)
            }
            PredicateConfig::Box { name, lower, upper } => AtomicPredicate::boxed(name, lower.clone(), upper.clone()),
        }
    }

    pub fn from_predicate(p: &AtomicPredicate) -> Self {
        match p.shape() {
            Shape::Halfspace { weights, offset } => PredicateConfig::Halfspace {
                name: p.name().to_string(),
                weights: weights.iter().copied().collect(),
                offset: *offset,
            },
            Shape::Box { lower, upper } => PredicateConfig::Box {
                name: p.name().to_string(),
                lower: lower.clone(),
                upper: upper.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceConfig {
    pub epsilon: f64,
    pub max_depth: usize,
    /// Largest primitive window end `b`, in sampling periods (at most `history`).
    pub max_window: usize,
    /// Environment feature indices offered to the primitives; all by default.
    pub features: Option<Vec<usize>>,
    /// `"equal"` or `"ratio:<delta_c/delta_e>"`.
    pub tradeoff: String,
}

/// Ray along which the maximal certified pair `(delta_c, delta_e)` is taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tradeoff {
    Equal,
    /// `delta_c = lambda * delta_e`.
    Ratio(f64),
}

impl Tradeoff {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || {
            Error::Scenario(format!(
                "trade-off `{text}` is neither `equal` nor `ratio:<positive number>`"
            ))
        };
        if text == "equal" {
            return Ok(Tradeoff::Equal);
        }
        let lambda: f64 = text
            .strip_prefix("ratio:")
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(bad());
        }
        Ok(Tradeoff::Ratio(lambda))
    }
}

impl std::fmt::Display for Tradeoff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tradeoff::Equal => f.write_str("equal"),
            Tradeoff::Ratio(l) => write!(f, "ratio:{l}"),
        }
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Scenario(format!(
            "{what} must be a non-empty rectangular matrix"
        )));
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.iter().flatten().copied(),
    ))
}

fn metric(rows: &Option<Vec<Vec<f64>>>, dim: usize, what: &str) -> Result<Metric> {
    match rows {
        None => Ok(Metric::identity(dim)),
        Some(rows) => {
            let m = Metric::new(matrix(rows, what)?).map_err(|e| Error::Scenario(format!("{what}: {e}")))?;
            if m.dim() != dim {
                return Err(Error::Scenario(format!(
                    "{what} metric has dimension {}, expected {dim}",
                    m.dim()
                )));
            }
            Ok(m)
        }
    }
}

fn build_map(cfg: &MapConfig, input_dim: usize, input: &Metric, output: &Metric, what: &str) -> Result<FeatureMap> {
    let map = match cfg {
        MapConfig::Select { indices, lipschitz } => {
            FeatureMap::select(indices.clone(), input_dim, *lipschitz, input, output)
        }
        MapConfig::Affine {
            matrix: rows,
            offset,
            lipschitz,
        } => FeatureMap::affine(
            matrix(rows, what)?,
            DVector::from_vec(offset.clone()),
            *lipschitz,
            input,
            output,
        ),
    };
    map.map_err(|e| Error::Scenario(format!("{what}: {e}")))
}

fn map_output_dim(cfg: &MapConfig) -> usize {
    match cfg {
        MapConfig::Select { indices, .. } => indices.len(),
        MapConfig::Affine { matrix, .. } => matrix.len(),
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub plant: LinearSystem,
    pub period: Time,
    pub horizon: usize,
    pub history: usize,
    pub state_metric: Metric,
    pub env_metric: Metric,
    pub feature_metric: Metric,
    pub spec_metric: Metric,
    pub env_map: FeatureMap,
    pub spec_map: SpecMap,
    pub predicates: PredicateMap,
    pub formula: Formula,
    pub sequential: SequentialSpec,
    pub tradeoff: Tradeoff,
    pub fingerprint: String,
}

impl Scenario {
    pub fn from_config(config: ScenarioConfig) -> Result<Self> {
        let p = &config.plant;
        let inputs = p.inputs.iter().map(|u| DVector::from_vec(u.clone())).collect();
        let plant = LinearSystem::new(matrix(&p.a, "plant.a")?, matrix(&p.b, "plant.b")?, inputs)?;
        let period: Time = p
            .period
            .parse()
            .map_err(|_| Error::Scenario(format!("period `{}` is not a decimal number", p.period)))?;
        if period <= Time::ZERO {
            return Err(Error::Scenario("period must be positive".into()));
        }

        let n = plant.state_dim();
        let feature_dim = map_output_dim(&config.env_map);
        let spec_dim = map_output_dim(&config.spec_map);
        let state_metric = metric(&config.metrics.state, n, "metrics.state")?;
        let env_metric = metric(&config.metrics.env, config.env_dim, "metrics.env")?;
        let feature_metric = metric(&config.metrics.env_features, feature_dim, "metrics.env_features")?;
        let spec_metric = metric(&config.metrics.spec_features, spec_dim, "metrics.spec_features")?;

        let env_map = build_map(&config.env_map, config.env_dim, &env_metric, &feature_metric, "env_map")?;
        let stacked = block_diag(&state_metric, &feature_metric)?;
        let spec_fm = build_map(&config.spec_map, n + feature_dim, &stacked, &spec_metric, "spec_map")?;
        let spec_map = SpecMap::new(spec_fm, &state_metric, &feature_metric, &spec_metric)?;

        let predicates = PredicateMap::from_predicates(
            spec_dim,
            config
                .predicates
                .iter()
                .map(PredicateConfig::build)
                .collect::<Result<Vec<_>>>()?,
        )?;
        predicates.validate_against(&spec_metric)?;
        let formula = parse_formula(&config.spec, &predicates)?;
        let sequential = parse_sequential(&formula)?;

        let horizon_time = period.mul_int(p.horizon as i64);
        match required_horizon(&formula)? {
            Bound::Finite(h) if h <= horizon_time => {}
            need => {
                return Err(Error::Scenario(format!(
                    "horizon {} (= {horizon_time}) is shorter than the specification horizon {}",
                    p.horizon,
                    match need {
                        Bound::Finite(h) => h.to_string(),
                        Bound::Infinite => "inf".into(),
                    }
                )))
            }
        }

        let inf = &config.inference;
        if !(inf.epsilon.is_finite() && inf.epsilon >= 0.0) {
            return Err(Error::Scenario(
                "inference.epsilon must be a non-negative number".into(),
            ));
        }
        if inf.max_window == 0 || inf.max_window > config.history {
            return Err(Error::Scenario(format!(
                "inference.max_window = {} must lie in 1..={} (history depth)",
                inf.max_window, config.history
            )));
        }
        if let Some(fs) = &inf.features {
            if fs.is_empty() || fs.iter().any(|&f| f >= feature_dim) {
                return Err(Error::Scenario(format!(
                    "inference.features must be non-empty indices below {feature_dim}"
                )));
            }
        }
        let tradeoff = Tradeoff::parse(&inf.tradeoff)?;

        let canonical = toml::to_string(&config).map_err(|e| Error::Scenario(e.to_string()))?;
        let fingerprint = hex::encode(Sha256::digest(canonical.as_bytes()));
        Ok(Scenario {
            plant,
            period,
            horizon: p.horizon,
            history: config.history,
            state_metric,
            env_metric,
            feature_metric,
            spec_metric,
            env_map,
            spec_map,
            predicates,
            formula,
            sequential,
            tradeoff,
            fingerprint,
            config,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        Scenario::from_config(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scenario::from_toml(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.config).expect("scenario config serializes")
    }

    pub fn state_dim(&self) -> usize {
        self.plant.state_dim()
    }

    pub fn feature_dim(&self) -> usize {
        self.env_map.output_dim()
    }

    /// Primitive feature indices for inference.
    pub fn inference_features(&self) -> Vec<usize> {
        self.config
            .inference
            .features
            .clone()
            .unwrap_or_else(|| (0..self.feature_dim()).collect())
    }

    pub fn feature_names(&self) -> Vec<String> {
        default_names("h", self.feature_dim())
    }

    pub fn spec_names(&self) -> Vec<String> {
        default_names("q", self.spec_map.output_dim())
    }

    /// `h = H(y)` over the whole environment trace, history included.
    pub fn env_features(&self, env: &TimedTrace) -> Result<TimedTrace> {
        apply_feature_map(&self.env_map, env, self.feature_names())
    }

    /// `q(k) = Q(x(k), h(k))`.
    pub fn q_trace(&self, agent: &TimedTrace, h: &TimedTrace) -> Result<TimedTrace> {
        build_q_trace(agent, h, &self.spec_map, self.spec_names())
    }
}

fn block_diag(a: &Metric, b: &Metric) -> Result<Metric> {
    let (n, p) = (a.dim(), b.dim());
    let mut m = DMatrix::zeros(n + p, n + p);
    m.view_mut((0, 0), (n, n)).copy_from(a.matrix());
    m.view_mut((n, n), (p, p)).copy_from(b.matrix());
    Metric::new(m)
}

/// Stand-alone predicate map file used by `parse` and `monitor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateFile {
    pub dim: usize,
    pub metric: Option<Vec<Vec<f64>>>,
    pub predicates: Vec<PredicateConfig>,
}

impl PredicateFile {
    pub fn load(path: impl AsRef<Path>) -> Result<(PredicateMap, Metric)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: PredicateFile = toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        cfg.build()
    }

    pub fn build(&self) -> Result<(PredicateMap, Metric)> {
        let m = metric(&self.metric, self.dim, "metric")?;
        let pmap = PredicateMap::from_predicates(
            self.dim,
            self.predicates
                .iter()
                .map(PredicateConfig::build)
                .collect::<Result<Vec<_>>>()?,
        )?;
        pmap.validate_against(&m)?;
        Ok((pmap, m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::reach_avoid_scenario;

    #[test]
    fn fixture_scenario_validates() {
        let s = reach_avoid_scenario();
        assert_eq!(s.sequential.chain.len(), 2);
        assert!((s.spec_map.l_x() - 2f64.sqrt()).abs() < 1e-12);
        assert!((s.spec_map.l_h() - 1.0).abs() < 1e-12);
        assert_eq!(s.fingerprint.len(), 64);
        let again = Scenario::from_toml(&s.to_toml()).unwrap();
        assert_eq!(again.fingerprint, s.fingerprint);
    }

    #[test]
    fn cross_validation_errors() {
        let base = reach_avoid_scenario().config;
        let mut short = base.clone();
        short.plant.horizon = 39;
        assert!(Scenario::from_config(short).is_err());
        let mut window = base.clone();
        window.inference.max_window = base.history + 1;
        assert!(Scenario::from_config(window).is_err());
        let mut lip = base.clone();
        if let MapConfig::Affine { lipschitz, .. } = &mut lip.spec_map {
            *lipschitz = 1.5;
        }
        assert!(Scenario::from_config(lip).is_err());
        let mut frag = base;
        frag.spec = "G[0,40) r1".into();
        assert!(matches!(Scenario::from_config(frag), Err(Error::OutsideFragment(_))));
    }

    #[test]
    fn tradeoff_parsing() {
        assert_eq!(Tradeoff::parse("equal").unwrap(), Tradeoff::Equal);
        assert_eq!(Tradeoff::parse("ratio:2").unwrap(), Tradeoff::Ratio(2.0));
        assert!(Tradeoff::parse("ratio:-1").is_err());
        assert!(Tradeoff::parse("ratio").is_err());
    }
}
