use tlcl_core::closed_loop::ClosedLoop;
use tlcl_core::demos::DemonstrationSet;
use tlcl_core::fixtures::{reach_avoid_demos, reach_avoid_scenario};
use tlcl_core::inference::{
    adversarial_perturbation, check_adversarial, check_conditions, infer, Classifier, Exclusivity, InferenceOptions,
};

fn setup() -> (tlcl_core::scenario::Scenario, DemonstrationSet, Classifier) {
    let s = reach_avoid_scenario();
    let demos = DemonstrationSet::from_traces(reach_avoid_demos(&s, 24, 7).unwrap(), &s).unwrap();
    let c = infer(&s, &demos, "demos", &InferenceOptions::from_scenario(&s)).unwrap();
    (s, demos, c)
}

#[test]
fn fixture_classifier_shape() {
    let (s, _, c) = setup();
    println!("{}", c.to_toml());
    assert_eq!(c.exclusivity, Exclusivity::Structural);
    assert_eq!(c.radii.rho_min, 0.5);
    assert_eq!(c.radii.margin, 0.5);
    let expected = 0.5 / (2f64.sqrt() + 1.0);
    assert!((c.radii.delta_e - expected).abs() < 1e-12);
    let back = Classifier::from_toml(&c.to_toml(), &s).unwrap();
    assert_eq!(back, c);
}

#[test]
fn fixture_replays_demonstrations() {
    let (s, demos, c) = setup();
    let lp = ClosedLoop::new(&s, &c).unwrap();
    for d in &demos.demos {
        let r = lp.simulate(d.x0(), &d.h, d.offset, d.steps()).unwrap();
        assert_eq!(r.agent.states(), d.agent.states());
        assert!(r.satisfied);
    }
}

#[test]
fn fixture_conditions() {
    let (s, demos, c) = setup();
    let r = check_conditions(&c, &demos, &s, 100, 1, 0.99).unwrap();
    println!("{}", r.to_toml());
    assert!(r.passed());
    let adv = adversarial_perturbation(&c, &demos, &s, 3.0 * c.radii.delta_e).unwrap();
    println!("{adv:?}");
    let r = check_adversarial(&c, &demos, &s, &adv).unwrap();
    println!("{}", r.to_toml());
    assert!(!r.condition(2).passed || !r.condition(3).passed);
}
