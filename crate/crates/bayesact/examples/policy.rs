//! Greedy action selection: score every difficulty level with sampled
//! affective candidates and pick the best pair.
//!
//! cargo run --release --example policy

use bayesact::app::AppModel;
use bayesact::dynamics::EquationSet;
use bayesact::filter::{AgentConfig, BeliefState};
use bayesact::policy::{self, PolicyConfig};
use bayesact::sentiment::Epa;
use bayesact::tutor::{self, TutorApp};

fn main() -> Result<(), bayesact::Error> {
    let eq = EquationSet::sample();
    let app = TutorApp::default();
    let cfg = AgentConfig { n: 200, sigma_r: Some(0.0), roughen_client: false, seed: 9, ..AgentConfig::default() };
    let belief = BeliefState::init(&tutor::tutor_identity(), &tutor::student_identity(), cfg, |r| app.init_x(r))?;

    let normative = policy::pi_dagger(&belief, &eq)?;
    println!("normative behaviour mean {}", Epa(&normative.behaviour_marginal().0));

    let pcfg = PolicyConfig { candidates: 30, integrand_samples: 10, ..PolicyConfig::default() };
    let pool = policy::candidate_pool(&belief, &app.action_set(), &eq, &pcfg, 1)?;
    let scores = policy::score_candidates(&belief, &pool, &app, &eq, &pcfg, 1)?;
    for level in app.action_set() {
        let best = pool
            .iter()
            .zip(&scores)
            .filter(|((a, _), _)| *a == level)
            .map(|(_, s)| *s)
            .fold(f64::NEG_INFINITY, f64::max);
        println!("difficulty {level}: best expected reward {best:.3}");
    }
    let choice = policy::greedy_over(&belief, &app.action_set(), &app, &eq, &pcfg, 1)?;
    println!("chosen: difficulty {} with behaviour {}", choice.a, Epa(&choice.b_a));
    Ok(())
}
