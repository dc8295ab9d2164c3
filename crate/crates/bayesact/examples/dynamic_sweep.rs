//! Tracking a changing identity: the client drifts towards a new identity and
//! the agent's belief has to follow.
//!
//! cargo run --release --example dynamic_sweep

use bayesact::data::Dictionary;
use bayesact::dynamics::EquationSet;
use bayesact::sim::{run_dynamic_sweep, DynamicSweep};

fn main() -> Result<(), bayesact::Error> {
    let cfg = DynamicSweep {
        episodes: 4,
        steps: 100,
        n: 100,
        speeds: vec![0.05, 0.5],
        sigma_e_list: vec![0.1],
        thresholds: vec![1.0],
        ..DynamicSweep::default()
    };
    for c in run_dynamic_sweep(&cfg, &EquationSet::sample(), &Dictionary::sample()?)? {
        let (_, frames) = c.deflected_frames[0];
        println!(
            "speed {:.2}: {:.1} of {} frames with identity deflection above 1, final {:.3}",
            c.speed, frames.mean, cfg.steps, c.final_id_deflection.mean
        );
    }
    Ok(())
}
