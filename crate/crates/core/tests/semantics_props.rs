use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tlcl_core::gen;
use tlcl_core::logic::{
    eval_boolean, eval_robust, eval_robust_oracle, necessary_length, required_horizon, trace_distance, Formula,
};
use tlcl_core::time::{Bound, Interval};

fn instance(
    seed: u64,
    past_only: bool,
) -> (
    Formula,
    tlcl_core::trace::TimedTrace,
    tlcl_core::logic::PredicateMap,
    tlcl_core::logic::Metric,
    usize,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=3);
    let diagonal = rng.random_bool(0.5);
    let metric = gen::metric(&mut rng, n, diagonal);
    let pmap = gen::predicate_map(&mut rng, n, diagonal);
    let len = rng.random_range(1..=20);
    let x = gen::trace(&mut rng, n, len);
    let phi = gen::formula(&mut rng, 4, past_only);
    let k = rng.random_range(0..len);
    (phi, x, pmap, metric, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn robust_matches_oracle_and_sign(seed in any::<u64>()) {
        let (phi, x, pmap, m, k) = instance(seed, false);
        let r = eval_robust(&phi, &x, k, &pmap, &m).unwrap();
        let o = eval_robust_oracle(&phi, &x, k, &pmap, &m).unwrap();
        prop_assert_eq!(r.to_bits(), o.to_bits(), "{} at {}: {} vs {}", phi, k, r, o);
        let b = eval_boolean(&phi, &x, k, &pmap, &m).unwrap();
        if r != 0.0 {
            prop_assert_eq!(b, r > 0.0);
        }
    }

    #[test]
    fn negation_and_de_morgan(seed in any::<u64>()) {
        let (phi, x, pmap, m, k) = instance(seed, false);
        let psi = gen::formula(&mut ChaCha8Rng::seed_from_u64(seed ^ 1), 3, false);
        let r = |f: &Formula| eval_robust(f, &x, k, &pmap, &m).unwrap();
        let b = |f: &Formula| eval_boolean(f, &x, k, &pmap, &m).unwrap();
        let nn = Formula::not(Formula::not(phi.clone()));
        prop_assert_eq!(r(&nn), r(&phi));
        let lhs = Formula::not(Formula::and(phi.clone(), psi.clone()));
        let rhs = Formula::or(Formula::not(phi.clone()), Formula::not(psi.clone()));
        prop_assert_eq!(r(&lhs), r(&rhs));
        prop_assert_eq!(b(&lhs), b(&rhs));
    }

    #[test]
    fn derived_operators_match_expansions(seed in any::<u64>()) {
        let (phi, x, pmap, m, k) = instance(seed, false);
        let i = gen::interval(&mut ChaCha8Rng::seed_from_u64(seed ^ 2));
        let pairs = [
            (Formula::eventually(i, phi.clone()), Formula::until(i, Formula::True, phi.clone())),
            (Formula::always(i, phi.clone()), Formula::not(Formula::until(i, Formula::True, Formula::not(phi.clone())))),
            (Formula::once(i, phi.clone()), Formula::since(i, Formula::True, phi.clone())),
            (Formula::historically(i, phi.clone()), Formula::not(Formula::since(i, Formula::True, Formula::not(phi.clone())))),
        ];
        for (d, e) in pairs {
            prop_assert_eq!(eval_robust(&d, &x, k, &pmap, &m).unwrap(), eval_robust(&e, &x, k, &pmap, &m).unwrap());
            prop_assert_eq!(eval_boolean(&d, &x, k, &pmap, &m).unwrap(), eval_boolean(&e, &x, k, &pmap, &m).unwrap());
        }
    }

    #[test]
    fn signed_distance_matches_projection(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let is_box = rng.random_bool(0.5);
        let m = gen::metric(&mut rng, 2, is_box);
        let p = if is_box { gen::boxed(&mut rng, "p", 2) } else { gen::halfspace(&mut rng, "p", 2) };
        let s = DVector::from_fn(2, |_, _| rng.random_range(-4.0..4.0));
        let closed = p.signed_distance(&s, &m).unwrap();
        let numeric = gen::numeric_signed_distance(&p, &s, &m);
        prop_assert!((closed - numeric).abs() <= 1e-6, "{:?} at {}: {} vs {}", p, s, closed, numeric);
    }

    #[test]
    fn horizons_monotone_under_widening(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let past = rng.random_bool(0.5);
        let phi = gen::formula(&mut rng, 4, past);
        let len = |f: &Formula| if past { necessary_length(f) } else { required_horizon(f) };
        let widened = widen(&phi);
        match (len(&phi), len(&widened)) {
            (Ok(a), Ok(b)) => {
                prop_assert!(a <= b);
                prop_assert!(Bound::Finite(tlcl_core::time::Time::ZERO) <= a);
            }
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "inconsistent {:?}", other),
        }
    }
}

/// Every finite upper bound moved out by one.
fn widen(f: &Formula) -> Formula {
    let w = |i: &Interval| match i.hi() {
        Bound::Finite(h) => Interval::new(i.lo(), Bound::Finite(h + tlcl_core::time::Time::from_integer(1))).unwrap(),
        Bound::Infinite => *i,
    };
    let b = |g: &Formula| Box::new(widen(g));
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(a) => Formula::Not(b(a)),
        Formula::And(x, y) => Formula::And(b(x), b(y)),
        Formula::Or(x, y) => Formula::Or(b(x), b(y)),
        Formula::Until(i, x, y) => Formula::Until(w(i), b(x), b(y)),
        Formula::Since(i, x, y) => Formula::Since(w(i), b(x), b(y)),
        Formula::Eventually(i, x) => Formula::Eventually(w(i), b(x)),
        Formula::Always(i, x) => Formula::Always(w(i), b(x)),
        Formula::Once(i, x) => Formula::Once(w(i), b(x)),
        Formula::Historically(i, x) => Formula::Historically(w(i), b(x)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    /// Perturbations strictly inside |robustness| never flip the verdict.
    #[test]
    fn robustness_is_sound(seed in any::<u64>()) {
        let (phi, x, pmap, m, k) = instance(seed, false);
        let r = eval_robust(&phi, &x, k, &pmap, &m).unwrap();
        prop_assume!(r != 0.0);
        let radius = r.abs().min(10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        for _ in 0..200 {
            let y = gen::perturb(&mut rng, &x, &m, radius);
            prop_assert!(trace_distance(&x, &y, &m).unwrap() < r.abs());
            prop_assert_eq!(eval_boolean(&phi, &y, k, &pmap, &m).unwrap(), r > 0.0);
        }
    }
}
