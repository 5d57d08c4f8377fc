//! One-clock alternating timed automata for the sequential reach-avoid
//! fragment, and the run-time location tracker used by the closed loop.

mod ocata;
mod sequential;
mod tracker;

pub use ocata::{ClockOp, Ocata, TransitionFormula};
pub use sequential::{build_ocata, parse_sequential, SequentialSpec};
pub use tracker::{track_location, LocationRun, LocationState, LocationTracker, StepRecord};
