//! Formulas, their concrete syntax, and the Boolean and robust semantics.

mod formula;
mod length;
mod metric;
pub mod oracle;
mod parser;
mod predicate;
mod semantics;

pub use formula::Formula;
pub use length::{necessary_length, required_horizon};
pub use metric::{spectral_norm, trace_distance, Metric};
pub use oracle::eval_robust_oracle;
pub use parser::{parse, parse_formula, resolve};
pub use predicate::{AtomicPredicate, PredicateMap, Shape};
pub(crate) use semantics::past_window;
pub use semantics::{boolean_series, eval_boolean, eval_robust, robust_series};
