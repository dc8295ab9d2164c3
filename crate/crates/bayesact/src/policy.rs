//! Action selection: the normative affective distribution and a one-step
//! greedy maximiser over (propositional, affective) pairs.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::app::{AppModel, Turn};
use crate::dynamics::EquationSet;
use crate::filter::{gaussian_from_hc, AgentConfig, BeliefState, BehaviourPrior, Gaussian9};
use crate::rng::{self, Rng64};
use crate::sentiment::{self, Object, Sentiment, Triple};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub w_x: f64,
    pub w_s: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { w_x: 1.0, w_s: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    /// Affective candidates drawn per propositional action.
    pub candidates: usize,
    /// Integrand samples per candidate for the one-step expectation.
    pub integrand_samples: usize,
    pub weights: RewardWeights,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig { candidates: 100, integrand_samples: 10, weights: RewardWeights::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActionChoice<A> {
    pub a: A,
    pub b_a: Triple,
    /// Estimated one-step reward; `None` when no evaluation was run.
    pub value: Option<f64>,
}

/// `w_x R_x(x', a) - w_s |f' - tau'|^2`.
pub fn evaluate_reward<A: AppModel>(
    f_prime: &Sentiment,
    tau_prime: &Sentiment,
    x_prime: &A::State,
    a: Option<&A::Action>,
    app: &A,
    weights: &RewardWeights,
) -> f64 {
    weights.w_x * app.reward(x_prime, a) - weights.w_s * sentiment::sq_dist(f_prime, tau_prime)
}

/// The normative action distribution at a point state: the fundamentals
/// posterior of the agent's turn with the behaviour left free.
pub fn pi_dagger_at(f: &Sentiment, tau: &Sentiment, eq: &EquationSet, cfg: &AgentConfig) -> Result<Gaussian9, Error> {
    gaussian_from_hc(f, &eq.hc(tau, Turn::Agent), BehaviourPrior::Free, cfg)
}

/// The normative action distribution at the belief's expected state.
pub fn pi_dagger<S>(belief: &BeliefState<S>, eq: &EquationSet) -> Result<Gaussian9, Error>
where
    S: Clone + Send + Sync + PartialEq,
{
    pi_dagger_at(&belief.expected_f(), &belief.expected_tau(), eq, &belief.cfg)
}

pub fn sample_behaviour<R: Rng + ?Sized>(g: &Gaussian9, rng: &mut R) -> Triple {
    sentiment::block(&g.sample(rng), Object::Behaviour)
}

/// Average of `k` behaviour draws from the normative distribution.
pub fn mean_behaviour<R: Rng + ?Sized>(g: &Gaussian9, k: usize, rng: &mut R) -> Triple {
    let k = k.max(1);
    (0..k).fold(Triple::zeros(), |acc, _| acc + sample_behaviour(g, rng)) / k as f64
}

fn pick_weighted(w: &[f64], rng: &mut Rng64) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, wi) in w.iter().enumerate() {
        cum += wi;
        if u < cum {
            return i;
        }
    }
    w.len() - 1
}

/// Monte Carlo one-step expected reward of `(a, b_a)` under the belief.
pub fn expected_reward<A: AppModel>(
    belief: &BeliefState<A::State>,
    a: &A::Action,
    b_a: &Triple,
    app: &A,
    eq: &EquationSet,
    pcfg: &PolicyConfig,
    rng: &mut Rng64,
) -> Result<f64, Error> {
    let w = belief.normalized_weights();
    let n = pcfg.integrand_samples.max(1);
    let mut total = 0.0;
    for _ in 0..n {
        let p = &belief.particles[pick_weighted(&w, rng)];
        let s = p.successor(Some(b_a), Some(a), eq, &belief.cfg, app, rng)?;
        total += evaluate_reward(&s.f, &s.tau, &s.x, Some(a), app, &pcfg.weights);
    }
    Ok(total / n as f64)
}

/// Candidate pool: for every propositional action, `candidates` draws from
/// the normative distribution, in a seeded order.
pub fn candidate_pool<S, Act>(
    belief: &BeliefState<S>,
    actions: &[Act],
    eq: &EquationSet,
    pcfg: &PolicyConfig,
    seed: u64,
) -> Result<Vec<(Act, Triple)>, Error>
where
    S: Clone + Send + Sync + PartialEq,
    Act: Clone,
{
    let g = pi_dagger(belief, eq)?;
    let mut rng = rng::derive(rng::sub_seed(seed, 0xCA4D), belief.step, 0);
    let mut out = Vec::new();
    for a in actions {
        for _ in 0..pcfg.candidates.max(1) {
            out.push((a.clone(), sample_behaviour(&g, &mut rng)));
        }
    }
    Ok(out)
}

/// Evaluate every candidate; returns the estimated reward of each, in pool order.
pub fn score_candidates<A: AppModel>(
    belief: &BeliefState<A::State>,
    pool: &[(A::Action, Triple)],
    app: &A,
    eq: &EquationSet,
    pcfg: &PolicyConfig,
    seed: u64,
) -> Result<Vec<f64>, Error> {
    let base = rng::sub_seed(seed, 0x5C0E);
    pool.par_iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let mut r = rng::derive(base, belief.step, i as u32);
            expected_reward(belief, a, b, app, eq, pcfg, &mut r)
        })
        .collect()
}

/// First index of the maximum.
pub fn argmax_first(v: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, x) in v.iter().enumerate() {
        if best.is_none_or(|b| *x > v[b]) {
            best = Some(i);
        }
    }
    best
}

/// One-step lookahead over the app's whole action set.
pub fn greedy_action<A: AppModel>(
    belief: &BeliefState<A::State>,
    app: &A,
    eq: &EquationSet,
    pcfg: &PolicyConfig,
    seed: u64,
) -> Result<ActionChoice<A::Action>, Error> {
    greedy_over(belief, &app.action_set(), app, eq, pcfg, seed)
}

/// One-step lookahead restricted to the given propositional actions: the
/// candidate with the highest estimated reward.
pub fn greedy_over<A: AppModel>(
    belief: &BeliefState<A::State>,
    actions: &[A::Action],
    app: &A,
    eq: &EquationSet,
    pcfg: &PolicyConfig,
    seed: u64,
) -> Result<ActionChoice<A::Action>, Error> {
    let pool = candidate_pool(belief, actions, eq, pcfg, seed)?;
    let scores = score_candidates(belief, &pool, app, eq, pcfg, seed)?;
    let i = argmax_first(&scores).ok_or_else(|| Error::Usage("empty action set".into()))?;
    let (a, b_a) = pool[i].clone();
    Ok(ActionChoice { a, b_a, value: Some(scores[i]) })
}

/// Integration point for deeper planners.
pub trait Planner<A: AppModel> {
    fn choose(
        &self,
        belief: &BeliefState<A::State>,
        app: &A,
        eq: &EquationSet,
        horizon: usize,
        seed: u64,
    ) -> Result<ActionChoice<A::Action>, Error>;
}

/// Horizon 0 samples the normative distribution with the first propositional
/// action; any positive horizon is treated as one step.
#[derive(Clone, Copy, Debug, Default)]
pub struct GreedyPlanner {
    pub cfg: PolicyConfig,
}

impl<A: AppModel> Planner<A> for GreedyPlanner {
    fn choose(
        &self,
        belief: &BeliefState<A::State>,
        app: &A,
        eq: &EquationSet,
        horizon: usize,
        seed: u64,
    ) -> Result<ActionChoice<A::Action>, Error> {
        if horizon == 0 {
            let a = app.action_set().into_iter().next().ok_or_else(|| Error::Usage("empty action set".into()))?;
            let g = pi_dagger(belief, eq)?;
            let mut r = rng::derive(rng::sub_seed(seed, 0xCA4D), belief.step, 0);
            return Ok(ActionChoice { a, b_a: sample_behaviour(&g, &mut r), value: None });
        }
        greedy_action(belief, app, eq, &self.cfg, seed)
    }
}

pub fn planner_hook<A: AppModel, P: Planner<A>>(
    planner: &P,
    belief: &BeliefState<A::State>,
    app: &A,
    eq: &EquationSet,
    horizon: usize,
    seed: u64,
) -> Result<ActionChoice<A::Action>, Error> {
    planner.choose(belief, app, eq, horizon, seed)
}
