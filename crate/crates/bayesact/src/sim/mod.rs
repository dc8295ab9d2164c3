//! Two-agent identity simulations: episodes, traces and sweeps.

mod sweep;

pub use sweep::{
    dynamic_csv, run_dynamic_sweep, run_static_sweep, static_csv, DynamicCell, DynamicSweep, StaticCell, StaticSweep,
    Stats,
};

use std::io::Write;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::app::{Turn, TurnTaking};
use crate::data::Dictionary;
use crate::dynamics::EquationSet;
use crate::filter::{AgentConfig, BeliefState};
use crate::policy;
use crate::rng::{self, Rng64};
use crate::sentiment::{Object, Triple};
use crate::Error;

/// Prior mean for an unknown interactant.
pub fn unknown_identity_mean() -> Triple {
    Triple::new(0.4, 0.4, 0.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Both know both identities.
    BothKnown,
    /// The client knows the agent; the agent must learn the client.
    AgentIdKnown,
    /// Neither knows the other.
    Hidden,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "both-known" => Ok(Mode::BothKnown),
            "agent-id-known" => Ok(Mode::AgentIdKnown),
            "hidden" | "agent-id-hidden" => Ok(Mode::Hidden),
            _ => Err(Error::Usage(format!("unknown mode `{s}` (both-known, agent-id-known, hidden)"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::BothKnown => "both-known",
            Mode::AgentIdKnown => "agent-id-known",
            Mode::Hidden => "hidden",
        })
    }
}

/// The client walks in a straight line between two identities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    pub target: Triple,
    pub speed: f64,
    /// First step of motion.
    pub start: usize,
    /// Steps to wait at each end before heading back; `None` stays forever.
    pub dwell: Option<usize>,
}

#[derive(Clone, Debug)]
struct Shifter {
    ends: [Triple; 2],
    pos: Triple,
    heading: usize,
    wait: Option<usize>,
    shift: Shift,
}

impl Shifter {
    fn new(from: Triple, shift: Shift) -> Self {
        Shifter { ends: [from, shift.target], pos: from, heading: 1, wait: None, shift }
    }

    /// Identity at step `t` (call once per step, in order).
    fn advance(&mut self, t: usize) -> Triple {
        if t < self.shift.start {
            return self.pos;
        }
        if let Some(w) = self.wait {
            if w == 0 {
                self.wait = None;
                self.heading = 1 - self.heading;
            } else {
                self.wait = Some(w - 1);
                return self.pos;
            }
        }
        let goal = self.ends[self.heading];
        let gap = goal - self.pos;
        if gap.norm() <= self.shift.speed {
            if self.pos != goal {
                self.pos = goal;
                if let Some(d) = self.shift.dwell {
                    self.wait = Some(d);
                }
            } else if self.shift.dwell.is_none() {
                return self.pos;
            }
        } else {
            self.pos += gap.normalize() * self.shift.speed;
        }
        self.pos
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeSpec {
    pub agent_id: Triple,
    pub client_id: Triple,
    pub mode: Mode,
    pub n: usize,
    pub sigma_e: f64,
    pub steps: usize,
    /// Variance scale of the deflection potential.
    pub alpha: f64,
    /// Per-step identity inertia for both agents' beliefs.
    pub beta: f64,
    /// Initial spread for identities known to the holder.
    pub beta0_known: f64,
    /// Normative draws averaged into each action.
    pub candidates: usize,
    pub shift: Option<Shift>,
    pub seed: u64,
}

impl Default for EpisodeSpec {
    fn default() -> Self {
        EpisodeSpec {
            agent_id: Triple::new(1.5, 1.5, -0.2),
            client_id: Triple::new(1.5, 0.3, 0.8),
            mode: Mode::Hidden,
            n: 100,
            sigma_e: 0.0,
            steps: 50,
            alpha: 0.5,
            beta: 0.001,
            beta0_known: 0.001,
            candidates: 100,
            shift: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefSummary {
    pub self_id: Triple,
    pub other_id: Triple,
    pub deflection: f64,
}

impl BeliefSummary {
    pub fn of<S: Clone + Send + Sync + PartialEq>(b: &BeliefState<S>) -> Self {
        let f = b.expected_f();
        BeliefSummary {
            self_id: crate::sentiment::block(&f, Object::Actor),
            other_id: crate::sentiment::block(&f, Object::Client),
            deflection: b.expected_deflection(),
        }
    }
}

/// One line of a trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Who acted, from the agent's point of view.
    pub actor: Turn,
    pub behaviour: Triple,
    pub observed: Triple,
    pub fallback: bool,
    pub true_client_id: Triple,
    pub agent: BeliefSummary,
    pub client: BeliefSummary,
    /// Agent's estimate of the client against the client's self-estimate.
    pub agent_id_deflection: f64,
    pub client_id_deflection: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub spec: EpisodeSpec,
    pub initial_agent: BeliefSummary,
    pub initial_client: BeliefSummary,
    pub steps: Vec<StepRecord>,
}

impl EpisodeTrace {
    pub fn final_agent_id_deflection(&self) -> f64 {
        self.steps.last().map_or_else(
            || (self.initial_agent.other_id - self.initial_client.self_id).norm_squared(),
            |s| s.agent_id_deflection,
        )
    }

    pub fn final_client_id_deflection(&self) -> f64 {
        self.steps.last().map_or_else(
            || (self.initial_client.other_id - self.initial_agent.self_id).norm_squared(),
            |s| s.client_id_deflection,
        )
    }

    /// Steps whose agent id-deflection exceeds `d_m`.
    pub fn deflected_frames(&self, d_m: f64) -> usize {
        self.steps.iter().filter(|s| s.agent_id_deflection > d_m).count()
    }

    /// JSON lines: one header object with the spec, then one object per step.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), Error> {
        serde_json::to_writer(&mut w, &serde_json::json!({
            "spec": self.spec,
            "initial_agent": self.initial_agent,
            "initial_client": self.initial_client,
        }))?;
        writeln!(w)?;
        for s in &self.steps {
            serde_json::to_writer(&mut w, s)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

/// `|E[other id in X] - E[self id in Y]|^2`.
pub fn id_deflection<S, T>(belief_of_other: &BeliefState<S>, other_self_belief: &BeliefState<T>) -> f64
where
    S: Clone + Send + Sync + PartialEq,
    T: Clone + Send + Sync + PartialEq,
{
    (belief_of_other.expected_identity(Object::Client) - other_self_belief.expected_identity(Object::Actor)).norm_squared()
}

/// Identity drawn from the per-dimension Gaussian fit of a dictionary.
pub fn sample_identity(mean: &Triple, sd: &Triple, rng: &mut Rng64) -> Triple {
    Triple::from_fn(|i, _| Normal::new(mean[i], sd[i]).expect("finite sd").sample(rng))
}

fn agent_config(spec: &EpisodeSpec, other_known: bool, id_sd: &Triple, gamma: f64, seed: u64) -> AgentConfig {
    AgentConfig {
        n: spec.n,
        beta_a: spec.beta,
        beta_c: spec.beta,
        beta0_a: [spec.beta0_known; 3],
        beta0_c: if other_known { [spec.beta0_known; 3] } else { (*id_sd).into() },
        gamma,
        alpha: spec.alpha,
        roughen_agent: false,
        roughen_client: !other_known,
        seed,
        ..AgentConfig::default()
    }
}

/// Two agents take turns; each action is the average of normative draws from
/// the actor's belief, and the observer sees it through Gaussian noise.
pub fn run_episode(spec: &EpisodeSpec, eq: &EquationSet, dict: &Dictionary) -> Result<EpisodeTrace, Error> {
    if spec.sigma_e.is_nan() || spec.sigma_e < 0.0 {
        return Err(Error::Usage("environment noise must be >= 0".into()));
    }
    let (_, id_sd) = dict.identity_gaussian()?;
    let gamma = spec.sigma_e.max(0.5);
    let (x_knows, y_knows) = match spec.mode {
        Mode::BothKnown => (true, true),
        Mode::AgentIdKnown => (false, true),
        Mode::Hidden => (false, false),
    };
    let x_cfg = agent_config(spec, x_knows, &id_sd, gamma, rng::sub_seed(spec.seed, 1));
    let y_cfg = agent_config(spec, y_knows, &id_sd, gamma, rng::sub_seed(spec.seed, 2));
    let x_other = if x_knows { spec.client_id } else { unknown_identity_mean() };
    let y_other = if y_knows { spec.agent_id } else { unknown_identity_mean() };
    let mut x = BeliefState::init(&spec.agent_id, &x_other, x_cfg, |_| Turn::Agent)?;
    let mut y = BeliefState::init(&spec.client_id, &y_other, y_cfg, |_| Turn::Client)?;
    let mut env = rng::derive(rng::sub_seed(spec.seed, 3), 0, 0);
    let noise = (spec.sigma_e > 0.0).then(|| Normal::new(0.0, spec.sigma_e).expect("finite noise"));
    let mut shifter = spec.shift.map(|s| Shifter::new(spec.client_id, s));
    let mut trace = EpisodeTrace {
        spec: spec.clone(),
        initial_agent: BeliefSummary::of(&x),
        initial_client: BeliefSummary::of(&y),
        steps: Vec::with_capacity(spec.steps),
    };
    let mut true_client = spec.client_id;
    for t in 0..spec.steps {
        let at = |e: Error| Error::AtStep { step: t, source: Box::new(e) };
        if let Some(sh) = shifter.as_mut() {
            true_client = sh.advance(t);
            y.set_self_identity(&true_client);
        }
        let actor_turn = if t % 2 == 0 { Turn::Agent } else { Turn::Client };
        let (actor, observer) = match actor_turn {
            Turn::Agent => (&mut x, &mut y),
            Turn::Client => (&mut y, &mut x),
        };
        let g = policy::pi_dagger(actor, eq).map_err(at)?;
        let mut r = rng::derive(rng::sub_seed(spec.seed, 4), t as u64, 0);
        let b = policy::mean_behaviour(&g, spec.candidates, &mut r);
        actor.propagate(Some(&b), Some(&()), eq, &TurnTaking).map_err(at)?;
        let mut omega = b;
        if let Some(nz) = &noise {
            for k in 0..3 {
                omega[k] += nz.sample(&mut env);
            }
        }
        let fallback = observer.update(None, None, Some(&omega), None, eq, &TurnTaking).map_err(at)?;
        if shifter.is_some() {
            y.set_self_identity(&true_client);
        }
        trace.steps.push(StepRecord {
            step: t,
            actor: actor_turn,
            behaviour: b,
            observed: omega,
            fallback,
            true_client_id: true_client,
            agent: BeliefSummary::of(&x),
            client: BeliefSummary::of(&y),
            agent_id_deflection: id_deflection(&x, &y),
            client_id_deflection: id_deflection(&y, &x),
        });
    }
    Ok(trace)
}

/// Random identity pair from the dictionary's Gaussian fit.
pub fn sample_pair(dict: &Dictionary, seed: u64) -> Result<(Triple, Triple), Error> {
    let (mean, sd) = dict.identity_gaussian()?;
    let mut r = rng::derive(seed, 0, 0);
    let a = sample_identity(&mean, &sd, &mut r);
    let c = sample_identity(&mean, &sd, &mut r);
    Ok((a, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifter_single_shift_stops_at_target() {
        let sh = Shift { target: Triple::new(1.0, 0.0, 0.0), speed: 0.3, start: 2, dwell: None };
        let mut s = Shifter::new(Triple::zeros(), sh);
        let path: Vec<f64> = (0..10).map(|t| s.advance(t)[0]).collect();
        let want = [0.0, 0.0, 0.3, 0.6, 0.9, 1.0, 1.0, 1.0, 1.0, 1.0];
        for (a, b) in path.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{path:?}");
        }
    }

    #[test]
    fn shifter_returns_after_dwell() {
        let sh = Shift { target: Triple::new(1.0, 0.0, 0.0), speed: 1.0, start: 0, dwell: Some(2) };
        let mut s = Shifter::new(Triple::zeros(), sh);
        let path: Vec<f64> = (0..6).map(|t| s.advance(t)[0]).collect();
        assert_eq!(path, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
    }
}
