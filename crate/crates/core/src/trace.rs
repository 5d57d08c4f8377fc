//! Timed state sequences and the trace CSV format.
//!
//! ```text
//! # optional comments
//! t,x1,x2
//! 0,0,0
//! 1,1,0
//! ```

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::time::Time;

#[derive(Debug, Clone, PartialEq)]
pub struct TimedTrace {
    names: Vec<String>,
    times: Vec<Time>,
    states: Vec<DVector<f64>>,
}

impl TimedTrace {
    pub fn new(names: Vec<String>, times: Vec<Time>, states: Vec<DVector<f64>>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if times.len() != states.len() {
            return Err(Error::TraceMismatch(format!(
                "{} timestamps but {} states",
                times.len(),
                states.len()
            )));
        }
        let dim = names.len();
        if let Some(bad) = states.iter().find(|s| s.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: bad.len(),
            });
        }
        if let Some(w) = times.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::TraceMismatch(format!(
                "timestamps not strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(TimedTrace { names, times, states })
    }

    /// Trace with default column names `x1..xn`.
    pub fn unnamed(times: Vec<Time>, states: Vec<DVector<f64>>) -> Result<Self> {
        let dim = states.first().map_or(0, |s| s.len());
        TimedTrace::new(default_names("x", dim), times, states)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn times(&self) -> &[Time] {
        &self.times
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn time(&self, k: usize) -> Time {
        self.times[k]
    }

    pub fn state(&self, k: usize) -> &DVector<f64> {
        &self.states[k]
    }

    pub fn index_of_time(&self, t: Time) -> Option<usize> {
        self.times.binary_search(&t).ok()
    }

    /// Sub-trace over `range` (must be non-empty).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<TimedTrace> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::IndexOutOfRange {
                index: range.end,
                len: self.len(),
            });
        }
        Ok(TimedTrace {
            names: self.names.clone(),
            times: self.times[range.clone()].to_vec(),
            states: self.states[range].to_vec(),
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: names.len(),
            });
        }
        self.names = names;
        Ok(self)
    }

    /// Same timestamps, new states.
    pub fn map_states(&self, names: Vec<String>, f: impl FnMut(&DVector<f64>) -> DVector<f64>) -> Result<TimedTrace> {
        TimedTrace::new(names, self.times.clone(), self.states.iter().map(f).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push('t');
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t}");
            for v in s.iter() {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, path: &Path) -> Result<TimedTrace> {
        let err = |line: usize, msg: String| Error::TraceFormat {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::EmptyTrace)?;
        let mut cols = header.split(',').map(str::trim);
        if cols.next() != Some("t") {
            return Err(err(hline, "header must start with `t`".into()));
        }
        let names: Vec<String> = cols.map(String::from).collect();
        if names.iter().any(String::is_empty) {
            return Err(err(hline, "empty column name".into()));
        }
        let mut times: Vec<Time> = Vec::new();
        let mut states = Vec::new();
        for (line, row) in lines {
            let fields: Vec<&str> = row.split(',').map(str::trim).collect();
            if fields.len() != names.len() + 1 {
                return Err(err(
                    line,
                    format!("expected {} fields, found {}", names.len() + 1, fields.len()),
                ));
            }
            let t: Time = fields[0].parse().map_err(|e| err(line, e))?;
            if let Some(prev) = times.last() {
                if *prev >= t {
                    return Err(err(line, format!("non-increasing time {t} after {prev}")));
                }
            }
            let vals = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| err(line, format!("invalid number `{f}`"))))
                .collect::<Result<Vec<f64>>>()?;
            times.push(t);
            states.push(DVector::from_vec(vals));
        }
        if times.is_empty() {
            return Err(Error::EmptyTrace);
        }
        TimedTrace::new(names, times, states)
    }
}

pub fn default_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<TimedTrace> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TimedTrace::from_csv(&text, path)
}

pub fn save_trace(trace: &TimedTrace, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), trace.to_csv().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<TimedTrace> {
        TimedTrace::from_csv(text, Path::new("mem.csv"))
    }

    #[test]
    fn reads_two_point_scalar_trace() {
        let tr = parse("# demo\nt,s\n0,0\n1,3\n").unwrap();
        assert_eq!(tr.len(), 2);
        assert_eq!(tr.dim(), 1);
        assert_eq!(tr.state(1)[0], 3.0);
        assert_eq!(tr.time(1), Time::from_integer(1));
    }

    #[test]
    fn empty_data_section() {
        let e = parse("t,s\n# nothing\n").unwrap_err();
        assert_eq!(e.to_string(), "empty trace");
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(
            parse("t,s\n0,1\n0,2\n"),
            Err(Error::TraceFormat { line: 3, .. })
        ));
        assert!(matches!(parse("t,s\n0,1,2\n"), Err(Error::TraceFormat { line: 2, .. })));
        assert!(matches!(parse("t,s\n0,abc\n"), Err(Error::TraceFormat { .. })));
        assert!(matches!(parse("x,s\n0,1\n"), Err(Error::TraceFormat { line: 1, .. })));
    }

    #[test]
    fn negative_history_times_allowed() {
        let tr = parse("t,y\n-2,0\n-1,0\n0,1\n").unwrap();
        assert_eq!(tr.index_of_time(Time::ZERO), Some(2));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(
            steps in proptest::collection::vec(1i64..50, 1..20),
            start in -100i64..100,
            vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO, 40),
        ) {
            let mut t = Time::new(start, 10);
            let mut times = Vec::new();
            let mut states = Vec::new();
            for (i, s) in steps.iter().enumerate() {
                times.push(t);
                states.push(DVector::from_vec(vec![vals[2 * i], vals[2 * i + 1]]));
                t = t + Time::new(*s, 100);
            }
            let tr = TimedTrace::new(vec!["a".into(), "b".into()], times, states).unwrap();
            let back = parse(&tr.to_csv()).unwrap();
            prop_assert_eq!(back, tr);
        }
    }
}
