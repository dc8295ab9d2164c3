use approx::assert_relative_eq;
use proptest::prelude::*;

use bayesact::app::Turn;
use bayesact::data::Dictionary;
use bayesact::dynamics::{build_k, interact_trace, optimal_behaviour, optimal_identity, psi, EquationSet, Role};
use bayesact::sentiment::{self, DeflectionWeights, Sentiment, Triple};

fn epa() -> impl Strategy<Value = Triple> {
    prop::array::uniform3(-3.0..3.0f64).prop_map(Triple::from)
}

fn turn() -> impl Strategy<Value = Turn> {
    prop_oneof![Just(Turn::Agent), Just(Turn::Client)]
}

fn sentiment_vec() -> impl Strategy<Value = Sentiment> {
    (epa(), epa(), epa()).prop_map(|(a, b, c)| sentiment::stack(&a, &b, &c))
}

#[test]
fn tutor_student_trace_is_frozen() {
    let eq = EquationSet::sample();
    let dict = Dictionary::sample().unwrap();
    let f = sentiment::stack(&dict.resolve("tutor").unwrap(), &Triple::zeros(), &dict.resolve("student").unwrap());
    let trace = interact_trace(&f, 4, &eq, &DeflectionWeights::default()).unwrap();
    let want = [
        ([1.0637911021160136, 1.0633026141167645, 0.58593083387806], 0.7403714228548843),
        ([1.258404644522476, 0.6910030676516425, 0.8378389275878175], 2.1508800904758285),
        ([1.6312079053114552, 1.6446153329390234, 0.4361950338975074], 1.3529007888385953),
        ([1.218402243174421, 0.6148927504001642, 0.9172467334852704], 2.5496318253921593),
    ];
    for (s, (b, d)) in trace.iter().zip(want) {
        assert_relative_eq!(s.behaviour, Triple::from(b), epsilon = 1e-9);
        assert_relative_eq!(s.deflection, d, epsilon = 1e-9);
    }
}

#[test]
fn trace_starts_from_zero_transient_behaviour() {
    let eq = EquationSet::sample();
    let f = sentiment::stack(&Triple::new(1.0, 1.0, 0.0), &Triple::new(5.0, 5.0, 5.0), &Triple::new(0.5, 0.0, 1.0));
    let a = interact_trace(&f, 3, &eq, &DeflectionWeights::default()).unwrap();
    let g = sentiment::with_behaviour(&f, &Triple::zeros());
    let b = interact_trace(&g, 3, &eq, &DeflectionWeights::default()).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_refactoring_matches_direct(f in sentiment_vec(), tau in sentiment_vec(), t in turn()) {
        let eq = EquationSet::sample();
        let direct = eq.predict_direct(&f, &tau, t);
        let via_hc = eq.transient_update(&tau, &f, t);
        prop_assert!((direct - via_hc).amax() < 1e-9);
    }

    #[test]
    fn potential_is_half_squared_residual(f in sentiment_vec(), tau in sentiment_vec(), t in turn()) {
        let eq = EquationSet::sample();
        let hc = eq.hc(&tau, t);
        let r = build_k(&hc.h) * f - hc.c;
        let p = psi(&f, &tau, t, &eq, &DeflectionWeights::default());
        prop_assert!((p - 0.5 * r.norm_squared()).abs() < 1e-9 * (1.0 + p));
    }

    #[test]
    fn optimal_behaviour_is_a_minimum(
        f in sentiment_vec(), tau in sentiment_vec(), t in turn(),
        d in prop::array::uniform3(-0.5..0.5f64),
    ) {
        let eq = EquationSet::sample();
        let w = DeflectionWeights::default();
        let b = optimal_behaviour(&f, &tau, t, &eq, &w).unwrap();
        let at = |x: &Triple| psi(&sentiment::with_behaviour(&f, x), &tau, t, &eq, &w);
        prop_assert!(at(&b) <= at(&(b + Triple::from(d))) + 1e-9);
    }

    #[test]
    fn optimal_identity_is_a_minimum(
        f in sentiment_vec(), tau in sentiment_vec(), t in turn(),
        d in prop::array::uniform3(-0.5..0.5f64), actor in any::<bool>(),
    ) {
        let eq = EquationSet::sample();
        let w = DeflectionWeights::default();
        let role = if actor { Role::Actor } else { Role::Object };
        let id = optimal_identity(role, &f, &tau, t, &eq, &w).unwrap();
        let at = |x: &Triple| {
            let mut g = f;
            sentiment::set_block(&mut g, role.block(), x);
            psi(&g, &tau, t, &eq, &w)
        };
        prop_assert!(at(&id) <= at(&(id + Triple::from(d))) + 1e-9);
    }

    #[test]
    fn client_turn_mirrors_agent_turn(f in sentiment_vec(), tau in sentiment_vec()) {
        let eq = EquationSet::sample();
        let mirrored = sentiment::swap_ac(&eq.predict_direct(&sentiment::swap_ac(&f), &sentiment::swap_ac(&tau), Turn::Agent));
        prop_assert!((mirrored - eq.predict_direct(&f, &tau, Turn::Client)).amax() < 1e-9);
    }

    #[test]
    fn deflection_is_a_weighted_square(f in sentiment_vec(), tau in sentiment_vec(), s in 0.1..3.0f64) {
        let d = sentiment::deflection(&f, &tau, &DeflectionWeights::default());
        prop_assert!(d >= 0.0);
        prop_assert!((d - sentiment::sq_dist(&f, &tau)).abs() < 1e-9);
        prop_assert!((sentiment::deflection(&f, &tau, &DeflectionWeights::uniform(s)) - s * d).abs() < 1e-9 * (1.0 + d));
        prop_assert_eq!(sentiment::deflection(&f, &f, &DeflectionWeights::default()), 0.0);
        prop_assert_eq!(sentiment::swap_ac(&sentiment::swap_ac(&f)), f);
    }
}
