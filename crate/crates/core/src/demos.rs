//! Demonstration sets: `demo_<i>/{agent,env,input}.csv` directories.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::env_offset;
use crate::logic::eval_robust;
use crate::scenario::Scenario;
use crate::time::Time;
use crate::trace::{default_names, load_trace, save_trace, TimedTrace};

/// One validated demonstration with its derived traces.
#[derive(Debug, Clone)]
pub struct Demonstration {
    pub agent: TimedTrace,
    /// Raw environment signal, history rows included.
    pub env: TimedTrace,
    /// Recorded inputs, one row per step `k = 0..K-1`.
    pub inputs: TimedTrace,
    /// Index of each recorded input in the plant's input set.
    pub input_ids: Vec<usize>,
    /// `h = H(y)`, history rows included.
    pub h: TimedTrace,
    /// Row of `h` (and `env`) sampled at the agent's first time.
    pub offset: usize,
    pub q: TimedTrace,
    pub robustness: f64,
}

impl Demonstration {
    pub fn steps(&self) -> usize {
        self.agent.len() - 1
    }

    pub fn x0(&self) -> &DVector<f64> {
        self.agent.state(0)
    }
}

#[derive(Debug, Clone)]
pub struct DemonstrationSet {
    pub demos: Vec<Demonstration>,
    /// SHA-256 over the canonical CSV renderings, in order.
    pub digest: String,
}

fn invalid(index: usize, msg: impl Into<String>) -> Error {
    Error::Demonstration { index, msg: msg.into() }
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

impl Demonstration {
    pub fn validate(
        index: usize,
        agent: TimedTrace,
        env: TimedTrace,
        inputs: TimedTrace,
        scenario: &Scenario,
    ) -> Result<Self> {
        let sys = &scenario.plant;
        if agent.dim() != sys.state_dim() {
            return Err(invalid(
                index,
                format!("agent dimension {} != state dimension {}", agent.dim(), sys.state_dim()),
            ));
        }
        if env.dim() != scenario.config.env_dim {
            return Err(invalid(
                index,
                format!("environment dimension {} != {}", env.dim(), scenario.config.env_dim),
            ));
        }
        let steps = agent.len() - 1;
        if inputs.len() != steps {
            return Err(invalid(
                index,
                format!("{} input rows for {} steps", inputs.len(), steps),
            ));
        }
        if inputs.dim() != sys.input_dim() {
            return Err(invalid(
                index,
                format!("input dimension {} != {}", inputs.dim(), sys.input_dim()),
            ));
        }
        for k in 0..steps {
            if inputs.time(k) != agent.time(k) {
                return Err(invalid(
                    index,
                    format!(
                        "input time {} != agent time {} at step {k}",
                        inputs.time(k),
                        agent.time(k)
                    ),
                ));
            }
        }
        let input_ids = inputs
            .states()
            .iter()
            .enumerate()
            .map(|(k, u)| sys.input_index(u).map_err(|e| invalid(index, format!("step {k}: {e}"))))
            .collect::<Result<Vec<_>>>()?;

        let offset = env_offset(&agent, &env).map_err(|e| invalid(index, e.to_string()))?;
        let d = scenario.history;
        if offset < d {
            return Err(invalid(
                index,
                format!("environment has {offset} rows before t(0), history depth is {d}"),
            ));
        }
        let span = scenario.period.mul_int(scenario.config.inference.max_window as i64);
        for k in 0..agent.len() {
            let reach: Time = env.time(offset + k) - env.time(offset + k - d);
            if reach < span {
                return Err(invalid(
                    index,
                    format!("history at step {k} spans {reach}, primitive windows need {span}"),
                ));
            }
        }

        let replay = sys.simulate_open_loop(agent.state(0), inputs.states(), agent.times())?;
        for k in 0..agent.len() {
            if !agent
                .state(k)
                .iter()
                .zip(replay.state(k).iter())
                .all(|(a, b)| close(*a, *b))
            {
                return Err(invalid(
                    index,
                    format!("agent state at step {k} is inconsistent with the dynamics"),
                ));
            }
        }

        let h = scenario.env_features(&env)?;
        let q = scenario.q_trace(&agent, &h)?;
        let robustness = eval_robust(&scenario.formula, &q, 0, &scenario.predicates, &scenario.spec_metric)?;
        if robustness.is_nan() || robustness <= 0.0 {
            return Err(invalid(
                index,
                format!("specification robustness {robustness} is not positive"),
            ));
        }
        Ok(Demonstration {
            agent,
            env,
            inputs,
            input_ids,
            h,
            offset,
            q,
            robustness,
        })
    }
}

fn demo_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(i) = name
            .to_str()
            .and_then(|n| n.strip_prefix("demo_"))
            .and_then(|n| n.parse::<usize>().ok())
        else {
            continue;
        };
        if entry.path().is_dir() {
            found.push((i, entry.path()));
        }
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

impl DemonstrationSet {
    pub fn from_traces(raw: Vec<(TimedTrace, TimedTrace, TimedTrace)>, scenario: &Scenario) -> Result<Self> {
        let mut hasher = Sha256::new();
        let mut demos = Vec::with_capacity(raw.len());
        for (i, (agent, env, inputs)) in raw.into_iter().enumerate() {
            for t in [&agent, &env, &inputs] {
                hasher.update(t.to_csv().as_bytes());
            }
            demos.push(Demonstration::validate(i, agent, env, inputs, scenario)?);
        }
        if demos.is_empty() {
            return Err(Error::Demonstration {
                index: 0,
                msg: "demonstration set is empty".into(),
            });
        }
        Ok(DemonstrationSet {
            demos,
            digest: hex::encode(hasher.finalize()),
        })
    }

    pub fn load(dir: impl AsRef<Path>, scenario: &Scenario) -> Result<Self> {
        let mut raw = Vec::new();
        for d in demo_dirs(dir.as_ref())? {
            raw.push((
                load_trace(d.join("agent.csv"))?,
                load_trace(d.join("env.csv"))?,
                load_trace(d.join("input.csv"))?,
            ));
        }
        DemonstrationSet::from_traces(raw, scenario)
    }

    pub fn len(&self) -> usize {
        self.demos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demos.is_empty()
    }

    /// Smallest specification robustness over the set.
    pub fn rho_min(&self) -> f64 {
        self.demos.iter().map(|d| d.robustness).fold(f64::INFINITY, f64::min)
    }
}

/// Input trace with the `t,u1..um` header.
pub fn input_trace(times: &[Time], inputs: &[DVector<f64>]) -> Result<TimedTrace> {
    let m = inputs.first().map_or(0, DVector::len);
    TimedTrace::new(default_names("u", m), times[..inputs.len()].to_vec(), inputs.to_vec())
}

/// Write one `demo_<i>` directory per triple.
pub fn write_demo_set(dir: impl AsRef<Path>, raw: &[(TimedTrace, TimedTrace, TimedTrace)]) -> Result<()> {
    for (i, (agent, env, inputs)) in raw.iter().enumerate() {
        let d = dir.as_ref().join(format!("demo_{i}"));
        save_trace(agent, d.join("agent.csv"))?;
        save_trace(env, d.join("env.csv"))?;
        save_trace(inputs, d.join("input.csv"))?;
    }
    Ok(())
}
