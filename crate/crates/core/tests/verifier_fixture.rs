use tlcl_core::closed_loop::ClosedLoop;
use tlcl_core::demos::DemonstrationSet;
use tlcl_core::fixtures::{reach_avoid_demos, reach_avoid_scenario};
use tlcl_core::inference::{infer, Classifier, InferenceOptions};
use tlcl_core::logic::eval_boolean;
use tlcl_core::scenario::Scenario;
use tlcl_core::verifier::{falsify, verify_sampling, FalsifyOptions, Verdict, VerificationProblem};

fn setup() -> (Scenario, DemonstrationSet, Classifier) {
    let s = reach_avoid_scenario();
    let demos = DemonstrationSet::from_traces(reach_avoid_demos(&s, 24, 7).unwrap(), &s).unwrap();
    let c = infer(&s, &demos, "demos", &InferenceOptions::from_scenario(&s)).unwrap();
    (s, demos, c)
}

#[test]
fn zero_radius_replays_nominal_runs() {
    let (s, demos, c) = setup();
    let p = VerificationProblem::from_classifier(&c, &demos, &s, 50, 3, 0.0).unwrap();
    let r = verify_sampling(&p, &c, &s).unwrap();
    assert_eq!(r.verdict, Verdict::VerifiedSampled);
    let lp = ClosedLoop::new(&s, &c).unwrap();
    let mut nominal_min = f64::INFINITY;
    for sample in &r.samples {
        let d = &demos.demos[sample.demo];
        assert_eq!(sample.x0, d.x0().iter().copied().collect::<Vec<_>>());
        let run = lp.simulate(d.x0(), &d.h, d.offset, s.horizon).unwrap();
        assert_eq!(sample.robustness, run.robustness);
        nominal_min = nominal_min.min(run.robustness);
    }
    assert_eq!(r.min_robustness, nominal_min);
}

#[test]
fn certified_radii_verify() {
    let (s, demos, c) = setup();
    let p = VerificationProblem::from_classifier(&c, &demos, &s, 200, 11, 1.0).unwrap();
    let r = verify_sampling(&p, &c, &s).unwrap();
    assert_eq!(r.verdict, Verdict::VerifiedSampled);
    assert!(r.counterexamples.is_empty());
    assert!(r.min_robustness > 0.0);
    let f = falsify(&p, &c, &s, FalsifyOptions::default()).unwrap();
    assert!(!f.found);
    assert!(f.best_robustness > 0.0);
    println!(
        "{}",
        r.with_falsification(f)
            .to_toml()
            .lines()
            .take(30)
            .collect::<Vec<_>>()
            .join("\n")
    );
}

#[test]
fn triple_radii_falsify() {
    let (s, demos, c) = setup();
    let p = VerificationProblem::from_classifier(&c, &demos, &s, 200, 11, 3.0).unwrap();
    assert!(!p.certified);
    let f = falsify(&p, &c, &s, FalsifyOptions::default()).unwrap();
    println!("{f:?}");
    let cex = f.counterexample.as_ref().expect("counterexample");
    assert!(cex.confirmed);
    assert!(cex.result.robustness < 0.0);
    let lp = ClosedLoop::new(&s, &c).unwrap();
    let again = lp
        .simulate(&cex.x0, &cex.h, demos.demos[cex.demo].offset, s.horizon)
        .unwrap();
    assert!(!eval_boolean(&s.formula, &again.q, 0, &s.predicates, &s.spec_metric).unwrap());
    let r = verify_sampling(&p, &c, &s).unwrap().with_falsification(f);
    assert_eq!(r.verdict, Verdict::Falsified);
}

#[test]
fn budget_and_radius_validation() {
    let (s, demos, c) = setup();
    assert!(VerificationProblem::from_classifier(&c, &demos, &s, 0, 1, 1.0).is_err());
    let mut p = VerificationProblem::from_classifier(&c, &demos, &s, 10, 1, 1.0).unwrap();
    p.tube_radius = c.radii.delta_e * 1.01;
    assert!(verify_sampling(&p, &c, &s).is_err());
}
