//! Belief tracking: an agent that does not know whom it faces watches a
//! student's behaviours and narrows down the student's identity.
//!
//! cargo run --release --example filter

use bayesact::app::{Turn, TurnTaking};
use bayesact::data::Dictionary;
use bayesact::dynamics::EquationSet;
use bayesact::filter::{AgentConfig, BeliefState};
use bayesact::policy;
use bayesact::rng;
use bayesact::sentiment::{Epa, Object};
use bayesact::sim::unknown_identity_mean;

fn main() -> Result<(), bayesact::Error> {
    let eq = EquationSet::sample();
    let dict = Dictionary::sample()?;
    let (_, sd) = dict.identity_gaussian()?;
    let tutor = dict.resolve("tutor")?;
    let student = dict.resolve("student")?;

    // The observer starts from a broad prior over the other identity.
    let cfg = AgentConfig { n: 500, beta0_c: sd.into(), alpha: 0.5, gamma: 0.5, seed: 3, ..AgentConfig::default() };
    let mut observer = BeliefState::init(&tutor, &unknown_identity_mean(), cfg, |_| Turn::Client)?;
    // The student knows both identities and acts accordingly.
    let scfg = AgentConfig { n: 100, alpha: 0.5, roughen_client: false, seed: 4, ..AgentConfig::default() };
    let mut actor = BeliefState::init(&student, &tutor, scfg, |_| Turn::Agent)?;

    println!("true student identity {}", Epa(&student));
    for step in 0..20u64 {
        let mut r = rng::derive(5, step, 0);
        let (acting, watching) = if step % 2 == 0 { (&mut actor, &mut observer) } else { (&mut observer, &mut actor) };
        let b = policy::mean_behaviour(&policy::pi_dagger(acting, &eq)?, 100, &mut r);
        acting.propagate(Some(&b), Some(&()), &eq, &TurnTaking)?;
        watching.update(None, None, Some(&b), None, &eq, &TurnTaking)?;
        if step % 4 == 3 {
            let est = observer.expected_identity(Object::Client);
            println!("step {:2}: belief about the student {} (error {:.3})", step + 1, Epa(&est), (est - student).norm());
        }
    }
    Ok(())
}
