use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown atomic predicate `{0}`")]
    UnknownAtom(String),

    #[error("malformed interval at position {pos}: {msg}")]
    Interval { pos: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("index {index} out of range for trace of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid predicate `{name}`: {msg}")]
    Predicate { name: String, msg: String },

    #[error("invalid metric: {0}")]
    Metric(String),

    #[error("formula uses {found} operators where only {allowed} operators are allowed")]
    Direction { found: &'static str, allowed: &'static str },

    #[error("trace mismatch: {0}")]
    TraceMismatch(String),

    #[error("{path}:{line}: {msg}")]
    TraceFormat { path: PathBuf, line: usize, msg: String },

    #[error("empty trace")]
    EmptyTrace,

    #[error("invalid feature map: {0}")]
    FeatureMap(String),

    #[error("invalid demonstration {index}: {msg}")]
    Demonstration { index: usize, msg: String },

    #[error("formula outside sequential fragment: {0}")]
    OutsideFragment(String),

    #[error("invalid plant: {0}")]
    Plant(String),

    #[error("input {0} is not an element of the input set")]
    InputNotInSet(String),

    #[error("location {0} not covered by classifier")]
    UncoveredLocation(usize),

    #[error("classifier corruption at k={k}: {count} branch formulas hold at location {location}")]
    BranchSelection { location: usize, k: usize, count: usize },

    #[error("inseparable leaf at location {location}: {}", format_pairs(.pairs))]
    InseparableLeaf {
        location: usize,
        pairs: Vec<(SampleId, SampleId)>,
    },

    #[error("zero margin: branch `{formula}` at location {location} has robustness {value} on sample {sample}")]
    ZeroMargin {
        location: usize,
        formula: String,
        sample: SampleId,
        value: f64,
    },

    #[error("no positive radii: {0}")]
    NoPositiveRadii(String),

    #[error("corrupt demonstration run: {0}")]
    Corruption(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("invalid classifier file: {0}")]
    Classifier(String),

    #[error("scenario fingerprint mismatch: classifier built for {expected}, scenario is {got}")]
    Fingerprint { expected: String, got: String },

    #[error("invalid verification problem: {0}")]
    Problem(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {msg}")]
    Config { path: PathBuf, msg: String },
}

/// Identifies one training sample: demonstration index and time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SampleId {
    pub demo: usize,
    pub k: usize,
}

impl std::fmt::Display for SampleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(demo {}, k {})", self.demo, self.k)
    }
}

fn format_pairs(pairs: &[(SampleId, SampleId)]) -> String {
    let shown: Vec<String> = pairs.iter().take(8).map(|(a, b)| format!("{a} vs {b}")).collect();
    let mut out = format!("conflicting samples {}", shown.join(", "));
    if pairs.len() > shown.len() {
        out.push_str(&format!(" and {} more", pairs.len() - shown.len()));
    }
    out
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
