//! Identity learning between two strangers: more particles give lower final
//! identity deflection, and knowing both identities gives almost none.
//!
//! cargo run --release --example static_sweep

use bayesact::data::Dictionary;
use bayesact::dynamics::EquationSet;
use bayesact::sim::{run_static_sweep, static_csv, Mode, StaticSweep};

fn main() -> Result<(), bayesact::Error> {
    let cfg = StaticSweep {
        trials: 4,
        reps: 2,
        steps: 30,
        n_list: vec![5, 50],
        sigma_e_list: vec![0.0, 0.5],
        modes: vec![Mode::Hidden, Mode::BothKnown],
        ..StaticSweep::default()
    };
    let cells = run_static_sweep(&cfg, &EquationSet::sample(), &Dictionary::sample()?)?;
    for c in &cells {
        println!(
            "{:?} N={:3} noise={:.1}: median final agent id-deflection {:.4}",
            c.mode, c.n, c.sigma_e, c.agent_id_deflection.median
        );
    }
    static_csv(&cells, std::io::stdout())?;
    Ok(())
}
