//! Handwashing assistant: plan-graph progress and awareness dynamics coupled
//! to deflection, a threshold prompt policy, and the affective policy comparison.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::app::{AppModel, Turn, TurnTaking};
use crate::data::{self, Dictionary};
use crate::dynamics::EquationSet;
use crate::filter::{AgentConfig, BeliefState};
use crate::policy::{self, PolicyConfig};
use crate::rng::{self, Rng64};
use crate::sentiment::{self, Sentiment, Triple};
use crate::Error;

pub const PROMPT_THRESHOLD: f64 = 0.4;
pub const MAX_INTERACTIONS: usize = 50;
pub const INITIAL_AWARENESS: f64 = 0.7;
pub const OBS_ACCURACY: f64 = 0.95;

pub fn assistant_identity() -> Triple {
    Triple::new(1.5, 0.51, 0.45)
}

pub fn patient_identity() -> Triple {
    Triple::new(0.90, -0.69, -1.05)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: u8,
    pub to: u8,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanGraph {
    #[serde(default)]
    pub steps: Vec<String>,
    pub terminal: u8,
    pub edges: Vec<Edge>,
}

impl PlanGraph {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let g: PlanGraph = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn handwashing() -> Result<Self, Error> {
        Self::parse(&data::read_named("handwash_plan.json")?.0)
    }

    pub fn validate(&self) -> Result<(), Error> {
        for s in 0..self.terminal {
            let out = self.out_edges(s);
            if out.is_empty() {
                return Err(Error::Usage(format!("planstep {s} has no outgoing edge")));
            }
            let total: f64 = out.iter().map(|e| e.p).sum();
            if out.iter().any(|e| e.p.is_nan() || e.p < 0.0) || total > 1.0 + 1e-9 {
                return Err(Error::Usage(format!("planstep {s}: edge probabilities must be >= 0 and sum to <= 1")));
            }
        }
        if self.edges.iter().any(|e| e.from == self.terminal) {
            return Err(Error::Usage("terminal planstep must be absorbing".into()));
        }
        Ok(())
    }

    pub fn out_edges(&self, from: u8) -> Vec<&Edge> {
        self.edges.iter().filter(|e| e.from == from).collect()
    }

    /// Most likely successor, used as the prompt target.
    pub fn next_step(&self, from: u8) -> u8 {
        self.out_edges(from)
            .into_iter()
            .fold(None::<&Edge>, |best, e| match best {
                Some(b) if b.p >= e.p => Some(b),
                _ => Some(e),
            })
            .map_or(from, |e| e.to)
    }

    pub fn len(&self) -> usize {
        self.terminal as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoachState {
    pub ps: u8,
    pub aware: bool,
    pub turn: Turn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "target")]
pub enum CoachAction {
    Idle,
    Prompt(u8),
}

/// Constants of the awareness and progress dynamics. Deflection below
/// `d0` counts as a smooth interaction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoachDynamics {
    pub advance_max: f64,
    pub d0: f64,
    pub scale: f64,
    pub confusion_max: f64,
    pub unaware_stay: f64,
}

impl Default for CoachDynamics {
    fn default() -> Self {
        CoachDynamics { advance_max: 0.9, d0: 3.2, scale: 0.5, confusion_max: 0.5, unaware_stay: 0.95 }
    }
}

impl CoachDynamics {
    fn excess(&self, d: f64) -> f64 {
        (d - self.d0).max(0.0)
    }

    /// Advance probability of an aware, unprompted person.
    pub fn f_advance(&self, d: f64) -> f64 {
        self.advance_max * (-self.excess(d) / self.scale).exp()
    }

    /// Probability of following a prompt.
    pub fn f_prompt(&self, d: f64) -> f64 {
        self.f_advance(d)
    }

    /// Probability that a prompt confuses an aware person.
    pub fn p_confusion(&self, d: f64) -> f64 {
        self.confusion_max * (self.excess(d) / self.scale).min(1.0)
    }
}

/// Exact distribution over the person's state after the agent's move, given
/// whether it was a prompt and the deflection it left.
pub fn coach_kernel(
    x: &CoachState,
    prompted: bool,
    d: f64,
    graph: &PlanGraph,
    dy: &CoachDynamics,
) -> Vec<(CoachState, f64)> {
    let next = |ps: u8, aware: bool| CoachState { ps, aware, turn: Turn::Client };
    if x.ps >= graph.terminal {
        return vec![(next(x.ps, x.aware), 1.0)];
    }
    let edges = graph.out_edges(x.ps);
    let mut out = Vec::new();
    let advance = |p_adv: f64, out: &mut Vec<(CoachState, f64)>| -> f64 {
        let mut used = 0.0;
        for e in &edges {
            let p = p_adv * e.p;
            used += p;
            out.push((next(e.to, true), p));
        }
        used
    };
    match (x.aware, prompted) {
        (true, false) => {
            let used = advance(dy.f_advance(d), &mut out);
            out.push((next(x.ps, false), 1.0 - used));
        }
        (true, true) => {
            let c = dy.p_confusion(d);
            out.push((next(x.ps, false), c));
            let used = advance((1.0 - c) * dy.f_prompt(d), &mut out);
            out.push((next(x.ps, true), 1.0 - c - used));
        }
        (false, false) => {
            let used = advance(1.0 - dy.unaware_stay, &mut out);
            out.push((next(x.ps, false), 1.0 - used));
        }
        (false, true) => {
            let used = advance(dy.f_prompt(d), &mut out);
            out.push((next(x.ps, false), 1.0 - used));
        }
    }
    out.retain(|(_, p)| *p > 0.0);
    out
}

fn draw_state(dist: &[(CoachState, f64)], rng: &mut Rng64) -> CoachState {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (s, p) in dist {
        cum += p;
        if u < cum {
            return *s;
        }
    }
    dist.last().expect("non-empty distribution").0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoachApp {
    pub graph: PlanGraph,
    pub dynamics: CoachDynamics,
    pub initial_awareness: f64,
}

impl CoachApp {
    pub fn new(graph: PlanGraph) -> Self {
        CoachApp { graph, dynamics: CoachDynamics::default(), initial_awareness: INITIAL_AWARENESS }
    }

    /// Agent-side observation of the planstep: right with probability 0.95.
    pub fn observe(&self, ps: u8, rng: &mut Rng64) -> u8 {
        if rng.random::<f64>() < OBS_ACCURACY {
            ps
        } else {
            let other = rng.random_range(0..self.graph.terminal);
            if other >= ps {
                other + 1
            } else {
                other
            }
        }
    }
}

impl AppModel for CoachApp {
    type State = CoachState;
    type Action = CoachAction;
    /// Observed planstep.
    type Obs = u8;

    fn init_x(&self, rng: &mut Rng64) -> CoachState {
        CoachState { ps: 0, aware: rng.random::<f64>() < self.initial_awareness, turn: Turn::Client }
    }

    fn turn(&self, x: &CoachState) -> Turn {
        x.turn
    }

    fn sample_x(&self, x: &CoachState, f: &Sentiment, tau: &Sentiment, a: Option<&CoachAction>, rng: &mut Rng64) -> CoachState {
        match x.turn {
            Turn::Agent => {
                let prompted = matches!(a, Some(CoachAction::Prompt(_)));
                draw_state(&coach_kernel(x, prompted, sentiment::sq_dist(f, tau), &self.graph, &self.dynamics), rng)
            }
            Turn::Client => CoachState { turn: Turn::Agent, ..*x },
        }
    }

    fn reward(&self, x: &CoachState, _a: Option<&CoachAction>) -> f64 {
        x.ps as f64
    }

    fn obs_likelihood(&self, x: &CoachState, obs: &u8) -> f64 {
        if x.ps == *obs {
            OBS_ACCURACY
        } else {
            (1.0 - OBS_ACCURACY) / self.graph.terminal as f64
        }
    }

    fn action_set(&self) -> Vec<CoachAction> {
        vec![CoachAction::Idle]
    }
}

/// Prompt toward the most likely next step when Pr(AW) is strictly below 0.4.
pub fn prompt_policy(belief: &BeliefState<CoachState>, graph: &PlanGraph) -> CoachAction {
    let p_aw = belief.prob(|x| x.aware);
    prompt_decision(p_aw, modal_ps(belief), graph)
}

pub fn prompt_decision(p_aware: f64, ps: u8, graph: &PlanGraph) -> CoachAction {
    if p_aware < PROMPT_THRESHOLD {
        CoachAction::Prompt(graph.next_step(ps))
    } else {
        CoachAction::Idle
    }
}

pub fn modal_ps(belief: &BeliefState<CoachState>) -> u8 {
    let mut mass = [0.0f64; 256];
    for (p, w) in belief.particles.iter().zip(belief.normalized_weights()) {
        mass[p.x.ps as usize] += w;
    }
    (0..256).fold(0, |best, i| if mass[i] > mass[best] { i } else { best }) as u8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum AffectPolicy {
    BayesAct,
    Fixed { prompt: Triple, idle: Triple },
}

impl AffectPolicy {
    /// Named fixed pairs: `command`, `prompt`, `confer with` for prompting, `mind` otherwise.
    pub fn fixed(prompt_label: &str, idle_label: &str, dict: &Dictionary) -> Result<Self, Error> {
        Ok(AffectPolicy::Fixed { prompt: dict.resolve(prompt_label)?, idle: dict.resolve(idle_label)? })
    }

    pub fn label(&self) -> String {
        match self {
            AffectPolicy::BayesAct => "bayesact".into(),
            AffectPolicy::Fixed { prompt, idle } => format!("fixed({},{})", sentiment::Epa(prompt), sentiment::Epa(idle)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoachConfig {
    pub n: usize,
    pub client_n: usize,
    pub gamma: f64,
    pub policy: PolicyConfig,
    /// Draws averaged for the simulated person's own behaviour.
    pub client_samples: usize,
    pub max_interactions: usize,
}

impl Default for CoachConfig {
    fn default() -> Self {
        CoachConfig {
            n: 300,
            client_n: 100,
            gamma: 0.5,
            policy: PolicyConfig::default(),
            client_samples: 100,
            max_interactions: MAX_INTERACTIONS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoachTurn {
    pub turn: Turn,
    pub ps: u8,
    pub aware: bool,
    pub action: Option<CoachAction>,
    pub behaviour: Triple,
    pub agent_belief_client: Triple,
    pub agent_p_aware: f64,
    pub client_deflection: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoachEpisode {
    pub interactions: usize,
    pub last_planstep: u8,
    pub finished: bool,
    pub turns: Vec<CoachTurn>,
}

/// One simulated session. The person is itself an affect-control agent that
/// knows both identities; the assistant starts believing it faces a patient.
pub fn coach_episode(
    client_identity: &Triple,
    affect: &AffectPolicy,
    app: &CoachApp,
    eq: &EquationSet,
    dict: &Dictionary,
    cfg: &CoachConfig,
    seed: u64,
) -> Result<CoachEpisode, Error> {
    let (_, id_sd) = dict.identity_gaussian()?;
    let agent_cfg = AgentConfig {
        n: cfg.n,
        gamma: cfg.gamma,
        beta0_c: id_sd.into(),
        roughen_client: true,
        seed: rng::sub_seed(seed, 1),
        ..AgentConfig::default()
    };
    let mut agent = BeliefState::init(&assistant_identity(), &patient_identity(), agent_cfg, |r| app.init_x(r))?;
    let client_cfg = AgentConfig {
        n: cfg.client_n,
        gamma: cfg.gamma,
        roughen_client: false,
        seed: rng::sub_seed(seed, 3),
        ..AgentConfig::default()
    };
    let mut client = BeliefState::init(client_identity, &assistant_identity(), client_cfg, |_| Turn::Agent)?;
    let mut world = CoachState { ps: 0, aware: true, turn: Turn::Client };
    let mut world_rng = rng::derive(rng::sub_seed(seed, 4), 0, 0);
    let mut turns = Vec::new();
    let mut interactions = 0;
    while interactions < cfg.max_interactions && world.ps < app.graph.terminal {
        let step = interactions;
        let at = |e: Error| Error::AtStep { step, source: Box::new(e) };
        let (action, b) = match world.turn {
            Turn::Client => {
                let g = policy::pi_dagger(&client, eq).map_err(at)?;
                let mut r = rng::derive(rng::sub_seed(seed, 5), step as u64, 0);
                let b = policy::mean_behaviour(&g, cfg.client_samples, &mut r);
                client.propagate(Some(&b), Some(&()), eq, &TurnTaking).map_err(at)?;
                world.turn = Turn::Agent;
                let obs = app.observe(world.ps, &mut world_rng);
                agent.update(None, None, Some(&b), Some(&obs), eq, app).map_err(at)?;
                (None, b)
            }
            Turn::Agent => {
                let a = prompt_policy(&agent, &app.graph);
                let b = match affect {
                    AffectPolicy::BayesAct => {
                        let g = policy::pi_dagger(&agent, eq).map_err(at)?;
                        let mut r = rng::derive(rng::sub_seed(seed, 6), step as u64, 0);
                        policy::mean_behaviour(&g, cfg.policy.candidates, &mut r)
                    }
                    AffectPolicy::Fixed { prompt, idle } => match a {
                        CoachAction::Prompt(_) => *prompt,
                        CoachAction::Idle => *idle,
                    },
                };
                agent.propagate(Some(&b), Some(&a), eq, app).map_err(at)?;
                client.update(None, None, Some(&b), None, eq, &TurnTaking).map_err(at)?;
                let prompted = matches!(a, CoachAction::Prompt(_));
                world = draw_state(&coach_kernel(&world, prompted, client.expected_deflection(), &app.graph, &app.dynamics), &mut world_rng);
                (Some(a), b)
            }
        };
        turns.push(CoachTurn {
            turn: if action.is_some() { Turn::Agent } else { Turn::Client },
            ps: world.ps,
            aware: world.aware,
            action,
            behaviour: b,
            agent_belief_client: agent.expected_identity(sentiment::Object::Client),
            agent_p_aware: agent.prob(|x| x.aware),
            client_deflection: client.expected_deflection(),
        });
        interactions += 1;
    }
    Ok(CoachEpisode {
        interactions,
        last_planstep: world.ps,
        finished: world.ps >= app.graph.terminal,
        turns,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoachSummary {
    pub client: String,
    pub policy: String,
    pub trials: usize,
    pub mean_interactions: f64,
    pub se_interactions: f64,
    pub mean_last_planstep: f64,
    pub se_last_planstep: f64,
    pub finished: usize,
    pub interactions: Vec<usize>,
    pub last_plansteps: Vec<u8>,
}

pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Independent trials for one (identity, affective policy) cell.
#[allow(clippy::too_many_arguments)]
pub fn coach_experiment(
    client_label: &str,
    client_identity: &Triple,
    affect: &AffectPolicy,
    trials: usize,
    app: &CoachApp,
    eq: &EquationSet,
    dict: &Dictionary,
    cfg: &CoachConfig,
    seed: u64,
) -> Result<CoachSummary, Error> {
    let eps: Vec<CoachEpisode> = (0..trials)
        .into_par_iter()
        .map(|t| coach_episode(client_identity, affect, app, eq, dict, cfg, rng::sub_seed(seed, 100 + t as u64)))
        .collect::<Result<_, _>>()?;
    let inter: Vec<f64> = eps.iter().map(|e| e.interactions as f64).collect();
    let last: Vec<f64> = eps.iter().map(|e| e.last_planstep as f64).collect();
    let (mi, si) = mean_se(&inter);
    let (ml, sl) = mean_se(&last);
    Ok(CoachSummary {
        client: client_label.into(),
        policy: affect.label(),
        trials,
        mean_interactions: mi,
        se_interactions: si,
        mean_last_planstep: ml,
        se_last_planstep: sl,
        finished: eps.iter().filter(|e| e.finished).count(),
        interactions: eps.iter().map(|e| e.interactions).collect(),
        last_plansteps: eps.iter().map(|e| e.last_planstep).collect(),
    })
}
