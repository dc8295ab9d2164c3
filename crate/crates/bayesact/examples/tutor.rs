//! A scripted tutoring session: the agent sets questions, a simulated student
//! answers according to a hidden skill level, and the tutor's belief about the
//! skill follows the answers.
//!
//! cargo run --release --example tutor

use rand::Rng;

use bayesact::app::AppModel;
use bayesact::dynamics::EquationSet;
use bayesact::filter::{AgentConfig, BeliefState};
use bayesact::policy::{self, PolicyConfig};
use bayesact::rng;
use bayesact::sentiment::Epa;
use bayesact::tutor::{self, Context, StatementTable, TutorApp, TutorObs};

fn main() -> Result<(), bayesact::Error> {
    let eq = EquationSet::sample();
    let app = TutorApp::default();
    let statements = StatementTable::sample()?;
    let cfg = AgentConfig { n: 300, sigma_r: Some(0.0), roughen_client: false, seed: 2, ..AgentConfig::default() };
    let mut belief = BeliefState::init(&tutor::tutor_identity(), &tutor::student_identity(), cfg, |r| app.init_x(r))?;
    let pcfg = PolicyConfig { candidates: 30, integrand_samples: 5, ..PolicyConfig::default() };
    let true_skill = 1u8;
    let mut world = rng::derive(77, 0, 0);
    let mut context = Context::AgentCorrect;

    for round in 0..6u64 {
        let mean_skill = belief.mean_of(|x| x.skill as f64);
        let difficulty = tutor::propositional_policy(mean_skill, &mut rng::derive(3, round, 0));
        let choice = policy::greedy_over(&belief, &[difficulty], &app, &eq, &pcfg, round)?;
        let said = statements.nearest(&choice.b_a, context).expect("statement table covers every context");
        belief.propagate(Some(&said.epa), Some(&difficulty), &eq, &app)?;

        let correct = world.random::<f64>() < tutor::success_probability(difficulty, true_skill);
        let reply = statements.in_context(Context::client(correct)).next().expect("client statements present");
        belief.update(None, None, Some(&reply.epa), Some(&TutorObs { correct }), &eq, &app)?;
        context = Context::agent(correct);

        let p: Vec<String> = (0..3u8).map(|s| format!("{:.2}", belief.prob(|x| x.skill == s))).collect();
        println!(
            "round {round}: tutor says \"{}\" {} at difficulty {difficulty}; student {}; Pr(skill) = [{}]",
            said.text,
            Epa(&said.epa),
            if correct { "right" } else { "wrong" },
            p.join(", ")
        );
    }
    Ok(())
}
