use proptest::prelude::*;

use bayesact::app::{AppModel, Turn};
use bayesact::coach::{
    coach_episode, coach_kernel, prompt_decision, AffectPolicy, CoachAction, CoachApp, CoachConfig, CoachDynamics,
    CoachState, PlanGraph,
};
use bayesact::data::Dictionary;
use bayesact::dynamics::EquationSet;
use bayesact::filter::{AgentConfig, BeliefState};
use bayesact::policy::{self, argmax_first, PolicyConfig};
use bayesact::rng;
use bayesact::sentiment::Triple;
use bayesact::tutor::{
    self, skill_distribution, success_probability, Context, QuestionBank, SkillKernel, StatementTable, TutorApp,
    TutorState,
};

fn kernel() -> impl Strategy<Value = SkillKernel> {
    prop_oneof![Just(SkillKernel::Floored), Just(SkillKernel::Literal)]
}

#[test]
fn observation_table_is_exact() {
    let want = [[0.9, 0.5, 0.1], [0.99, 0.9, 0.5], [0.999, 0.99, 0.9]];
    for skill in 0..3u8 {
        for difficulty in 0..3u8 {
            assert_eq!(success_probability(difficulty, skill), want[skill as usize][difficulty as usize]);
        }
    }
}

#[test]
fn survey_statement_lookup() {
    let st = StatementTable::sample().unwrap();
    let s = st.find_text("You are an amazing tutor.").unwrap();
    assert_eq!(s.epa, Triple::new(2.96, 2.5, 1.5));
    assert_eq!(st.nearest(&s.epa, s.context).unwrap().id, s.id);
    for c in [Context::AgentCorrect, Context::AgentIncorrect, Context::ClientCorrect, Context::ClientIncorrect] {
        assert!(st.in_context(c).count() > 0, "{c:?} has statements");
    }
}

#[test]
fn question_bank_covers_every_level() {
    let bank = QuestionBank::sample().unwrap();
    let mut r = rng::derive(1, 0, 0);
    for d in 0..3u8 {
        assert_eq!(bank.pick(d, &mut r).unwrap().difficulty, d);
    }
    assert!(QuestionBank::parse(r#"[{"id":"x","difficulty":0,"prompt":"?","choices":["a"],"answer_index":1}]"#).is_err());
}

#[test]
fn propositional_policy_splits_ninety_ten() {
    let mut r = rng::derive(2, 0, 0);
    let up = (0..10_000).filter(|_| tutor::propositional_policy(0.9, &mut r) == 2).count();
    assert!((850..=1150).contains(&up), "{up} of 10000 went up");
    assert!((0..1000).all(|_| tutor::propositional_policy(2.4, &mut r) == 2));
}

#[test]
fn tutor_agent_move_flips_turn_and_sets_difficulty() {
    let app = TutorApp::default();
    let x = TutorState { difficulty: 0, skill: 1, turn: Turn::Agent };
    let f = bayesact::sentiment::Sentiment::zeros();
    let next = app.sample_x(&x, &f, &f, Some(&2), &mut rng::derive(3, 0, 0));
    assert_eq!((next.difficulty, next.turn), (2, Turn::Client));
    let back = app.sample_x(&next, &f, &f, None, &mut rng::derive(3, 0, 1));
    assert_eq!(back, TutorState { turn: Turn::Agent, ..next });
}

#[test]
fn plan_graph_shape() {
    let g = PlanGraph::handwashing().unwrap();
    assert_eq!(g.terminal, 7);
    assert_eq!(g.next_step(0), 1);
    assert_eq!(g.next_step(4), 6);
    assert!(PlanGraph::parse(r#"{"terminal":2,"edges":[{"from":0,"to":1,"p":0.6},{"from":0,"to":2,"p":0.6},{"from":1,"to":2,"p":1}]}"#).is_err());
    assert!(PlanGraph::parse(r#"{"terminal":1,"edges":[{"from":0,"to":1,"p":1},{"from":1,"to":0,"p":1}]}"#).is_err());
}

#[test]
fn prompt_threshold() {
    let g = PlanGraph::handwashing().unwrap();
    assert_eq!(prompt_decision(0.39, 3, &g), CoachAction::Prompt(4));
    assert_eq!(prompt_decision(0.4, 3, &g), CoachAction::Idle);
}

#[test]
fn coach_agent_turn_kernel_terminal_is_absorbing() {
    let g = PlanGraph::handwashing().unwrap();
    let x = CoachState { ps: 7, aware: false, turn: Turn::Agent };
    assert_eq!(coach_kernel(&x, true, 9.0, &g, &CoachDynamics::default()), vec![(CoachState { turn: Turn::Client, ..x }, 1.0)]);
}

#[test]
fn smooth_interaction_advances_more_than_a_jarring_one() {
    let g = PlanGraph::handwashing().unwrap();
    let dy = CoachDynamics::default();
    let x = CoachState { ps: 0, aware: true, turn: Turn::Agent };
    let progress = |d| coach_kernel(&x, false, d, &g, &dy).iter().filter(|(s, _)| s.ps > 0).map(|(_, p)| p).sum::<f64>();
    assert!(progress(1.0) > progress(6.0));
    assert!((progress(1.0) - dy.advance_max).abs() < 1e-12);
}

#[test]
fn coach_episodes_are_reproducible() {
    let eq = EquationSet::sample();
    let dict = Dictionary::sample().unwrap();
    let app = CoachApp::new(PlanGraph::handwashing().unwrap());
    let cfg = CoachConfig { n: 60, client_n: 30, max_interactions: 12, ..CoachConfig::default() };
    let elder = dict.resolve("elder").unwrap();
    let a = coach_episode(&elder, &AffectPolicy::BayesAct, &app, &eq, &dict, &cfg, 4).unwrap();
    let b = coach_episode(&elder, &AffectPolicy::BayesAct, &app, &eq, &dict, &cfg, 4).unwrap();
    assert_eq!(a, b);
    assert!(a.interactions <= 12);
    assert_eq!(a.turns[0].turn, Turn::Client);
}

#[test]
fn greedy_choice_is_seeded() {
    let eq = EquationSet::sample();
    let app = TutorApp::default();
    let cfg = AgentConfig { n: 40, sigma_r: Some(0.0), roughen_client: false, seed: 1, ..AgentConfig::default() };
    let b = BeliefState::init(&tutor::tutor_identity(), &tutor::student_identity(), cfg, |r| app.init_x(r)).unwrap();
    let pcfg = PolicyConfig { candidates: 10, integrand_samples: 3, ..PolicyConfig::default() };
    let x = policy::greedy_action(&b, &app, &eq, &pcfg, 8).unwrap();
    let y = policy::greedy_action(&b, &app, &eq, &pcfg, 8).unwrap();
    assert_eq!((x.a, x.b_a), (y.a, y.b_a));
    assert!(x.value.is_some_and(f64::is_finite));
}

#[test]
fn averaged_normative_draws_approach_the_mean() {
    let eq = EquationSet::sample();
    let cfg = AgentConfig { n: 40, seed: 1, ..AgentConfig::default() };
    let b = BeliefState::init(&tutor::tutor_identity(), &tutor::student_identity(), cfg, |_| Turn::Agent).unwrap();
    let g = policy::pi_dagger(&b, &eq).unwrap();
    let m = policy::mean_behaviour(&g, 20_000, &mut rng::derive(1, 0, 0));
    assert!((m - g.behaviour_marginal().0).amax() < 0.05);
}

#[test]
fn argmax_prefers_the_first_tie() {
    assert_eq!(argmax_first(&[1.0, 3.0, 3.0]), Some(1));
    assert_eq!(argmax_first(&[]), None);
}

proptest! {
    #[test]
    fn skill_rows_are_distributions(skill in 0u8..3, d in 0.0..50.0f64, k in kernel()) {
        let p = skill_distribution(skill, d, k);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|q| (0.0..=1.0).contains(q)));
        if k == SkillKernel::Floored {
            prop_assert!(p[skill as usize] >= 0.5 - 1e-12);
        }
    }

    #[test]
    fn nearest_statement_is_the_brute_force_minimum(e in -4.3..4.3f64, p in -4.3..4.3f64, a in -4.3..4.3f64, c in 0usize..4) {
        let st = StatementTable::sample().unwrap();
        let ctx = [Context::AgentCorrect, Context::AgentIncorrect, Context::ClientCorrect, Context::ClientIncorrect][c];
        let q = Triple::new(e, p, a);
        let got = st.nearest(&q, ctx).unwrap();
        let best = st.in_context(ctx).map(|s| (s.epa - q).norm_squared()).fold(f64::INFINITY, f64::min);
        prop_assert_eq!((got.epa - q).norm_squared(), best);
    }

    #[test]
    fn coach_kernel_rows_are_distributions(ps in 0u8..7, aware in any::<bool>(), prompted in any::<bool>(), d in 0.0..20.0f64) {
        let g = PlanGraph::handwashing().unwrap();
        let x = CoachState { ps, aware, turn: Turn::Agent };
        let row = coach_kernel(&x, prompted, d, &g, &CoachDynamics::default());
        prop_assert!((row.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(row.iter().all(|(s, p)| *p > 0.0 && s.turn == Turn::Client && (s.ps == ps || g.out_edges(ps).iter().any(|e| e.to == s.ps))));
    }
}
