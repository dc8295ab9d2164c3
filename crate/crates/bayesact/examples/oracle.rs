//! Deterministic affect-control oracle: a tutor and a student take turns acting
//! out the behaviour that best confirms their identities.
//!
//! cargo run --example oracle

use bayesact::data::Dictionary;
use bayesact::dynamics::{interact_trace, EquationSet};
use bayesact::sentiment::{self, DeflectionWeights, Epa, Triple};

fn main() -> Result<(), bayesact::Error> {
    let eq = EquationSet::sample();
    let dict = Dictionary::sample()?;
    let tutor = dict.resolve("tutor")?;
    let student = dict.resolve("student")?;
    let f = sentiment::stack(&tutor, &Triple::zeros(), &student);
    let trace = interact_trace(&f, 8, &eq, &DeflectionWeights::default())?;
    for (t, s) in trace.iter().enumerate() {
        let actor = if t % 2 == 0 { "tutor  " } else { "student" };
        let label = dict.nearest("behaviour", &s.behaviour).map_or("?", |e| e.label.as_str());
        println!("{t:2} {actor} acts {} (closest: {label}), deflection {:.3}", Epa(&s.behaviour), s.deflection);
    }
    Ok(())
}
