use crate::automaton::track_location;
use crate::demos::DemonstrationSet;
use crate::error::{Error, Result, SampleId};
use crate::scenario::Scenario;

/// One decision point of a demonstration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocationSample {
    pub id: SampleId,
    /// Row of the demonstration's feature trace `h` at this step.
    pub env_index: usize,
    /// Index of the recorded input in the input set.
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationSamples {
    /// Samples per reach location `l0..ln`.
    pub per_location: Vec<Vec<LocationSample>>,
    /// Locations with no samples.
    pub uncovered: Vec<usize>,
    /// Location of every step, per demonstration.
    pub runs: Vec<Vec<usize>>,
}

/// Assign every recorded step `k = 0..K-1` to the location the tracker
/// reports after reading `q(k)`.
pub fn collect_location_samples(demos: &DemonstrationSet, scenario: &Scenario) -> Result<LocationSamples> {
    let n = scenario.sequential.chain.len();
    let mut per_location = vec![Vec::new(); n + 1];
    let mut runs = Vec::with_capacity(demos.len());
    for (i, demo) in demos.demos.iter().enumerate() {
        let run = track_location(
            &scenario.sequential,
            &demo.q,
            &scenario.predicates,
            &scenario.spec_metric,
        )?;
        if !run.accepted() {
            return Err(Error::Corruption(format!(
                "demonstration {i} satisfies the specification but its automaton run is rejected"
            )));
        }
        let locations = run.locations();
        for (k, &label) in demo.input_ids.iter().enumerate() {
            per_location[locations[k]].push(LocationSample {
                id: SampleId { demo: i, k },
                env_index: demo.offset + k,
                label,
            });
        }
        runs.push(locations);
    }
    let uncovered = (0..=n).filter(|&l| per_location[l].is_empty()).collect();
    Ok(LocationSamples {
        per_location,
        uncovered,
        runs,
    })
}
