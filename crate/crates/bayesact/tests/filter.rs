use proptest::prelude::*;

use bayesact::app::{Turn, TurnTaking};
use bayesact::dynamics::EquationSet;
use bayesact::filter::{
    fundamentals_posterior, roughening_sigma, AgentConfig, BeliefState, Resampling,
};
use bayesact::rng;
use bayesact::sentiment::{self, Object, Triple};

fn tutor() -> Triple {
    Triple::new(1.5, 1.5, -0.2)
}

fn student() -> Triple {
    Triple::new(1.5, 0.3, 0.8)
}

fn belief(n: usize, seed: u64, turn: Turn) -> BeliefState<Turn> {
    let cfg = AgentConfig { n, seed, beta0_c: [1.0; 3], ..AgentConfig::default() };
    BeliefState::init(&tutor(), &student(), cfg, |_| turn).unwrap()
}

#[test]
fn init_draws_around_the_given_identities() {
    let b = belief(4000, 1, Turn::Agent);
    assert!((b.expected_identity(Object::Actor) - tutor()).amax() < 0.01);
    assert!((b.expected_identity(Object::Client) - student()).amax() < 0.1);
    assert!(b.particles.iter().all(|p| p.f == p.tau && sentiment::block(&p.f, Object::Behaviour) == Triple::zeros()));
    assert!((b.weight_sum() - 1.0).abs() < 1e-12);
}

#[test]
fn same_seed_same_belief_different_seed_differs() {
    let eq = EquationSet::sample();
    let run = |seed| {
        let mut b = belief(200, seed, Turn::Client);
        for k in 0..4 {
            b.update(None, None, Some(&Triple::new(1.0, 0.5 * k as f64, 0.2)), None, &eq, &TurnTaking).unwrap();
            b.propagate(Some(&Triple::new(1.0, 1.0, 0.0)), Some(&()), &eq, &TurnTaking).unwrap();
        }
        b
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}

#[test]
fn agent_turn_needs_a_behaviour() {
    let eq = EquationSet::sample();
    let f = sentiment::stack(&tutor(), &Triple::zeros(), &student());
    assert!(fundamentals_posterior(&f, &f, Turn::Agent, None, &eq, &AgentConfig::default()).is_err());
    let g = fundamentals_posterior(&f, &f, Turn::Agent, Some(&Triple::new(1.0, 1.0, 1.0)), &eq, &AgentConfig::default()).unwrap();
    assert_eq!(g.pinned, Some(Triple::new(1.0, 1.0, 1.0)));
}

#[test]
fn agent_propagation_pins_the_chosen_behaviour() {
    let eq = EquationSet::sample();
    let mut b = belief(100, 2, Turn::Agent);
    let act = Triple::new(0.7, -0.3, 1.1);
    b.propagate(Some(&act), Some(&()), &eq, &TurnTaking).unwrap();
    assert!(b.particles.iter().all(|p| sentiment::block(&p.f, Object::Behaviour) == act && p.x == Turn::Client));
}

#[test]
fn far_observation_falls_back_to_the_observation() {
    let eq = EquationSet::sample();
    let mut b = belief(100, 3, Turn::Client);
    b.cfg.gamma = 0.05;
    let far = Triple::new(30.0, 30.0, -30.0);
    assert!(b.update(None, None, Some(&far), None, &eq, &TurnTaking).unwrap());
    assert!(b.particles.iter().all(|p| sentiment::block(&p.f, Object::Behaviour) == far && p.w == 0.01));
    let near = sentiment::block(&b.particles[0].f, Object::Behaviour);
    let mut c = belief(100, 3, Turn::Client);
    c.propagate(None, None, &eq, &TurnTaking).unwrap();
    let typical = sentiment::block(&c.particles[0].f, Object::Behaviour);
    assert!(!c.reweight(Some(&typical), None, &TurnTaking));
    assert_ne!(near, typical);
}

#[test]
fn roughening_scale() {
    assert!((roughening_sigma(1000, 3, 1.0) - 0.1).abs() < 1e-12);
    assert_eq!(AgentConfig { n: 8, ..AgentConfig::default() }.roughening(), 0.5);
    assert_eq!(AgentConfig { sigma_r: Some(0.2), ..AgentConfig::default() }.roughening(), 0.2);
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        AgentConfig { n: 0, ..AgentConfig::default() },
        AgentConfig { gamma: 0.0, ..AgentConfig::default() },
        AgentConfig { alpha: f64::NAN, ..AgentConfig::default() },
        AgentConfig { gamma_d: 1.5, ..AgentConfig::default() },
        AgentConfig { sigma_r: Some(-1.0), ..AgentConfig::default() },
    ];
    for cfg in bad {
        assert!(BeliefState::init(&tutor(), &student(), cfg, |_| Turn::Agent).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weights_stay_normalised(seed in 0u64..1000, o in prop::array::uniform3(-4.0..4.0f64)) {
        let eq = EquationSet::sample();
        let mut b = belief(64, seed, Turn::Client);
        b.update(None, None, Some(&Triple::from(o)), None, &eq, &TurnTaking).unwrap();
        prop_assert!((b.weight_sum() - 1.0).abs() < 1e-9);
        prop_assert!(b.particles.iter().all(|p| p.w >= 0.0 && p.w.is_finite()));
    }

    #[test]
    fn resampling_respects_weights(
        raw in prop::collection::vec(0.0..1.0f64, 2..40), seed in 0u64..1000, systematic in any::<bool>(),
    ) {
        let mut b = belief(raw.len(), 0, Turn::Agent);
        b.cfg.resampling = if systematic { Resampling::Systematic } else { Resampling::Multinomial };
        for (p, w) in b.particles.iter_mut().zip(&raw) {
            p.w = *w;
        }
        let idx = b.resample_indices(&mut rng::derive(seed, 0, 0));
        let n = raw.len();
        prop_assert_eq!(idx.len(), n);
        let w = b.normalized_weights();
        for (i, wi) in w.iter().enumerate() {
            let count = idx.iter().filter(|&&j| j == i).count();
            if *wi == 0.0 {
                prop_assert_eq!(count, 0);
            }
            if systematic {
                // Systematic resampling keeps every count within one of its expectation.
                prop_assert!((count as f64 - n as f64 * wi).abs() < 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn known_identities_stay_put_under_small_inertia(seed in 0u64..200) {
        let eq = EquationSet::sample();
        let cfg = AgentConfig {
            n: 50, seed, beta_a: 1e-4, beta_c: 1e-4, beta0_a: [1e-4; 3], beta0_c: [1e-4; 3],
            roughen_client: false, ..AgentConfig::default()
        };
        let mut b = BeliefState::init(&tutor(), &student(), cfg, |_| Turn::Client).unwrap();
        for _ in 0..5 {
            b.update(None, None, Some(&Triple::new(1.0, 1.0, 0.5)), None, &eq, &TurnTaking).unwrap();
            b.propagate(Some(&Triple::new(1.0, 1.0, 0.0)), Some(&()), &eq, &TurnTaking).unwrap();
        }
        prop_assert!((b.expected_identity(Object::Client) - student()).amax() < 0.01);
        prop_assert!((b.expected_identity(Object::Actor) - tutor()).amax() < 0.01);
    }
}
