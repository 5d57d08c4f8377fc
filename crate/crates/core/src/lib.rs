//! Metric temporal logic monitoring, inference of temporal-logic input
//! classifiers from demonstrations, and sampling-based verification of the
//! resulting closed loop.
//!
//! The layers build on each other: [`logic`] holds formulas and their
//! Boolean and robust semantics, [`automaton`] tracks progress through a
//! sequential reach-avoid specification, [`plant`] and [`features`] describe
//! the controlled system and its observations, [`inference`] learns the
//! classifier and [`verifier`] checks it.

pub mod automaton;
pub mod closed_loop;
pub mod demos;
pub mod error;
pub mod features;
pub mod fixtures;
pub mod gen;
pub mod inference;
pub mod io;
pub mod logic;
pub mod plant;
pub mod sampling;
pub mod scenario;
pub mod time;
pub mod trace;
pub mod verifier;

pub use error::{Error, Result};
pub use logic::{AtomicPredicate, Formula, Metric, PredicateMap};
pub use time::{Bound, Interval, Time};
pub use trace::TimedTrace;
