//! Hand-washing assistant: compare the adaptive affective policy against a
//! fixed "command" style with two kinds of people.
//!
//! cargo run --release --example coach

use bayesact::coach::{coach_experiment, AffectPolicy, CoachApp, CoachConfig, PlanGraph};
use bayesact::data::Dictionary;
use bayesact::dynamics::EquationSet;

fn main() -> Result<(), bayesact::Error> {
    let eq = EquationSet::sample();
    let dict = Dictionary::sample()?;
    let app = CoachApp::new(PlanGraph::handwashing()?);
    let cfg = CoachConfig::default();
    let policies = [AffectPolicy::BayesAct, AffectPolicy::fixed("command", "mind", &dict)?];
    for client in ["elder", "boss"] {
        let id = dict.resolve(client)?;
        for p in &policies {
            let s = coach_experiment(client, &id, p, 10, &app, &eq, &dict, &cfg, 7)?;
            println!(
                "{client:5} {:28} {:5.1} ± {:.1} interactions, {}/10 finished, last step {:.1}",
                s.policy, s.mean_interactions, s.se_interactions, s.finished, s.mean_last_planstep
            );
        }
    }
    Ok(())
}
