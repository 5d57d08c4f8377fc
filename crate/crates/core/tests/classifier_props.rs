use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tlcl_core::closed_loop::ClosedLoop;
use tlcl_core::demos::DemonstrationSet;
use tlcl_core::fixtures::{reach_avoid_demos, reach_avoid_scenario};
use tlcl_core::inference::{collect_location_samples, infer, Classifier, InferenceOptions};
use tlcl_core::logic::{robust_series, Formula};
use tlcl_core::plant::uniform_times;
use tlcl_core::scenario::Scenario;
use tlcl_core::time::Time;
use tlcl_core::trace::TimedTrace;
use tlcl_core::verifier::{simulate_point, verify_sampling, VerificationProblem};

fn setup() -> (Scenario, DemonstrationSet, Classifier) {
    let s = reach_avoid_scenario();
    let demos = DemonstrationSet::from_traces(reach_avoid_demos(&s, 24, 7).unwrap(), &s).unwrap();
    let c = infer(&s, &demos, "demos", &InferenceOptions::from_scenario(&s)).unwrap();
    (s, demos, c)
}

fn conjuncts(f: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::And(a, b) => {
            conjuncts(a, out);
            conjuncts(b, out);
        }
        other => out.push(other.clone()),
    }
}

#[test]
fn exactly_one_branch_on_random_histories() {
    let (s, _, c) = setup();
    let cl = ClosedLoop::new(&s, &c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for loc in &c.locations {
        for _ in 0..1000 {
            let len = s.history + 1 + rng.random_range(0..4);
            let times = uniform_times(Time::ZERO, s.period, len - 1);
            let rows = (0..len)
                .map(|_| DVector::from_fn(2, |_, _| rng.random_range(-3.0..6.0)))
                .collect();
            let h = TimedTrace::new(s.feature_names(), times, rows).unwrap();
            let table = cl.branch_table(&h).unwrap();
            let row = rng.random_range(0..len);
            assert_eq!(cl.firing(&table, loc.location, row).unwrap().len(), 1);
        }
    }
}

#[test]
fn training_samples_are_sound_and_margins_are_conjunction_minima() {
    let (s, demos, c) = setup();
    let cl = ClosedLoop::new(&s, &c).unwrap();
    let smp = collect_location_samples(&demos, &s).unwrap();
    for (l, samples) in smp.per_location.iter().enumerate() {
        let Some(lc) = c.location(l) else {
            assert!(samples.is_empty());
            continue;
        };
        for x in samples {
            let h = &demos.demos[x.id.demo].h;
            let table = cl.branch_table(h).unwrap();
            let fired = cl.firing(&table, l, x.env_index).unwrap();
            assert_eq!(fired.len(), 1);
            let b = &lc.branches[fired[0]];
            let recorded = &s.plant.inputs()[x.label];
            assert!((recorded - &b.input_value).norm() <= c.epsilon);
            let rho = robust_series(&b.formula, h, &c.predicates, &s.feature_metric).unwrap()[x.env_index];
            let mut lits = Vec::new();
            conjuncts(&b.formula, &mut lits);
            let min = lits
                .iter()
                .map(|f| robust_series(f, h, &c.predicates, &s.feature_metric).unwrap()[x.env_index])
                .fold(f64::INFINITY, f64::min);
            assert_eq!(rho, min);
            assert!(rho >= b.margin && rho > 0.0);
        }
    }
}

#[test]
fn inference_is_independent_of_thread_count() {
    let (s, demos, c) = setup();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let single = pool.install(|| infer(&s, &demos, "demos", &InferenceOptions::from_scenario(&s)).unwrap());
    assert_eq!(single.to_toml(), c.to_toml());
}

#[test]
fn certificates_hold_under_smaller_environment_perturbations() {
    let (s, demos, c) = setup();
    let p = VerificationProblem::from_classifier(&c, &demos, &s, 40, 9, 1.0).unwrap();
    let report = verify_sampling(&p, &c, &s).unwrap();
    let cl = ClosedLoop::new(&s, &c).unwrap();
    for cert in &report.samples {
        assert!(cert.r_cert > 0.0);
        let point = p.sample(cert.index, &s).unwrap();
        let base = simulate_point(&p, &cl, point.demo, &point.x0, &point.h).unwrap();
        let branches: Vec<usize> = base.decisions.iter().map(|d| d.branch).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cert.index as u64);
        for _ in 0..20 {
            let h = tlcl_core::gen::perturb(&mut rng, &point.h, &s.feature_metric, cert.r_cert);
            let r = simulate_point(&p, &cl, point.demo, &point.x0, &h).unwrap();
            assert_eq!(r.decisions.iter().map(|d| d.branch).collect::<Vec<_>>(), branches);
            assert_eq!(r.satisfied, base.satisfied);
        }
    }
}

#[test]
fn verification_is_reproducible_and_monotone_in_tube_radius() {
    let (s, demos, c) = setup();
    let run = |scale: f64, seed: u64| {
        let mut p = VerificationProblem::from_classifier(&c, &demos, &s, 60, seed, 1.0).unwrap();
        p.tube_radius = c.radii.delta_e * scale;
        verify_sampling(&p, &c, &s).unwrap()
    };
    assert_eq!(run(1.0, 4).to_toml(), run(1.0, 4).to_toml());
    let mins: Vec<f64> = [0.25, 0.5, 1.0].iter().map(|&r| run(r, 4).min_robustness).collect();
    assert!(mins[0] >= mins[1] && mins[1] >= mins[2], "{mins:?}");
}
