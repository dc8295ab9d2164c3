//! Bootstrap particle filter over fundamentals, transients and application state.

mod posterior;

pub use crate::dynamics::build_k;
pub use posterior::{fundamentals_posterior, gaussian_from_hc, neg_log_potential, BehaviourPrior, Gaussian9};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::app::{AppModel, Turn};
use crate::dynamics::EquationSet;
use crate::rng::{self, Rng64, BELIEF_STREAM};
use crate::sentiment::{self, Object, Sentiment, Triple};
use crate::Error;

/// Weight sums below this count as all-zero.
pub const WEIGHT_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resampling {
    Systematic,
    Multinomial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Variance scale of the deflection potential.
    pub alpha: f64,
    /// Per-step identity inertia (std dev), self and other.
    pub beta_a: f64,
    pub beta_c: f64,
    /// Initial identity spread (std dev per EPA dimension).
    pub beta0_a: [f64; 3],
    pub beta0_c: [f64; 3],
    /// Std dev of the behaviour observation model.
    pub gamma: f64,
    pub gamma_d: f64,
    pub n: usize,
    /// Roughening half-width; `None` means `n^(-1/3)`.
    pub sigma_r: Option<f64>,
    pub roughen_agent: bool,
    pub roughen_client: bool,
    pub resampling: Resampling,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            alpha: 1.0,
            beta_a: 0.01,
            beta_c: 0.01,
            beta0_a: [0.01; 3],
            beta0_c: [0.01; 3],
            gamma: 1.0,
            gamma_d: 0.9,
            n: 300,
            sigma_r: None,
            roughen_agent: false,
            roughen_client: true,
            resampling: Resampling::Systematic,
            seed: 0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let positive = [self.alpha, self.beta_a, self.beta_c, self.gamma]
            .iter()
            .chain(&self.beta0_a)
            .chain(&self.beta0_c)
            .all(|v| v.is_finite() && *v > 0.0);
        if !positive {
            return Err(Error::Usage("alpha, betas and gamma must be positive".into()));
        }
        if self.n == 0 {
            return Err(Error::Usage("need at least one particle".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma_d) {
            return Err(Error::Usage("discount must lie in [0, 1]".into()));
        }
        if matches!(self.sigma_r, Some(s) if !(s.is_finite() && s >= 0.0)) {
            return Err(Error::Usage("roughening width must be >= 0".into()));
        }
        Ok(())
    }

    pub fn roughening(&self) -> f64 {
        self.sigma_r.unwrap_or_else(|| roughening_sigma(self.n, 3, 1.0))
    }
}

/// `K * N^(-1/d)`.
pub fn roughening_sigma(n: usize, d: u32, k: f64) -> f64 {
    k * (n as f64).powf(-1.0 / d as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle<S> {
    pub f: Sentiment,
    pub tau: Sentiment,
    pub x: S,
    pub w: f64,
}

impl<S: Clone> Particle<S> {
    /// Draw the successor state: f' from the Gaussian, tau' deterministically, then x'.
    pub fn successor<A: AppModel<State = S>>(
        &self,
        b_a: Option<&Triple>,
        a: Option<&A::Action>,
        eq: &EquationSet,
        cfg: &AgentConfig,
        app: &A,
        rng: &mut Rng64,
    ) -> Result<Particle<S>, Error> {
        let turn = app.turn(&self.x);
        let post = fundamentals_posterior(&self.f, &self.tau, turn, b_a, eq, cfg)?;
        let f = post.sample(rng);
        let tau = eq.transient_update(&self.tau, &f, turn);
        let x = app.sample_x(&self.x, &f, &tau, a, rng);
        Ok(Particle { f, tau, x, w: self.w })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedState<S> {
    pub f: Sentiment,
    pub tau: Sentiment,
    pub x: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefState<S> {
    pub particles: Vec<Particle<S>>,
    pub cfg: AgentConfig,
    pub step: u64,
}

fn gaussian_triple(mean: &Triple, sd: &[f64; 3], rng: &mut Rng64) -> Triple {
    Triple::from_fn(|i, _| {
        if sd[i] > 0.0 {
            Normal::new(mean[i], sd[i]).expect("finite sd").sample(rng)
        } else {
            mean[i]
        }
    })
}

impl<S: Clone + Send + Sync + PartialEq> BeliefState<S> {
    /// Identities drawn around `self_id` and `other_id` with the configured
    /// initial spreads; behaviour zero; transients equal to fundamentals.
    pub fn init(
        self_id: &Triple,
        other_id: &Triple,
        cfg: AgentConfig,
        mut x0: impl FnMut(&mut Rng64) -> S,
    ) -> Result<Self, Error> {
        cfg.validate()?;
        let mut rng = rng::derive(rng::sub_seed(cfg.seed, 0x1417), 0, 0);
        let w = 1.0 / cfg.n as f64;
        let particles = (0..cfg.n)
            .map(|_| {
                let a = gaussian_triple(self_id, &cfg.beta0_a, &mut rng);
                let c = gaussian_triple(other_id, &cfg.beta0_c, &mut rng);
                let f = sentiment::stack(&a, &Triple::zeros(), &c);
                Particle { f, tau: f, x: x0(&mut rng), w }
            })
            .collect();
        Ok(BeliefState { particles, cfg, step: 0 })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.particles.iter().map(|p| p.w).sum()
    }

    pub fn normalized_weights(&self) -> Vec<f64> {
        let s = self.weight_sum();
        if s > 0.0 {
            self.particles.iter().map(|p| p.w / s).collect()
        } else {
            vec![1.0 / self.len() as f64; self.len()]
        }
    }

    fn normalize(&mut self) {
        let w = self.normalized_weights();
        for (p, wi) in self.particles.iter_mut().zip(w) {
            p.w = wi;
        }
    }

    /// Indices of an unweighted resample of size N.
    pub fn resample_indices(&self, rng: &mut Rng64) -> Vec<usize> {
        let w = self.normalized_weights();
        let n = self.len();
        match self.cfg.resampling {
            Resampling::Systematic => {
                let u0: f64 = rng.random::<f64>() / n as f64;
                let mut out = Vec::with_capacity(n);
                let mut cum = w[0];
                let mut i = 0;
                for k in 0..n {
                    let u = u0 + k as f64 / n as f64;
                    while u > cum && i + 1 < n {
                        i += 1;
                        cum += w[i];
                    }
                    out.push(i);
                }
                out
            }
            Resampling::Multinomial => {
                let cdf: Vec<f64> = w
                    .iter()
                    .scan(0.0, |acc, x| {
                        *acc += x;
                        Some(*acc)
                    })
                    .collect();
                (0..n)
                    .map(|_| {
                        let u: f64 = rng.random();
                        cdf.partition_point(|c| *c < u).min(n - 1)
                    })
                    .collect()
            }
        }
    }

    /// Resample, roughen unknown identities, and push every particle through
    /// the transition. `b_a` is required when particles are on the agent's turn.
    pub fn propagate<A: AppModel<State = S>>(
        &mut self,
        b_a: Option<&Triple>,
        a: Option<&A::Action>,
        eq: &EquationSet,
        app: &A,
    ) -> Result<(), Error> {
        let step = self.step;
        let seed = self.cfg.seed;
        let idx = self.resample_indices(&mut rng::derive(seed, step, BELIEF_STREAM));
        let cfg = &self.cfg;
        let sigma_r = cfg.roughening();
        let w = 1.0 / self.len() as f64;
        let src = &self.particles;
        let next: Result<Vec<_>, Error> = idx
            .par_iter()
            .enumerate()
            .map(|(i, &j)| {
                let mut r = rng::derive(seed, step, i as u32);
                let mut p = src[j].clone();
                p.w = w;
                roughen(&mut p.f, cfg, sigma_r, &mut r);
                p.successor(b_a, a, eq, cfg, app, &mut r)
            })
            .collect();
        self.particles = next?;
        self.step += 1;
        Ok(())
    }

    /// Multiply weights by the observation likelihoods. Returns true when every
    /// weight vanished and the fallback (f_b := omega_f, uniform weights) ran.
    pub fn reweight<A: AppModel<State = S>>(
        &mut self,
        omega_f: Option<&Triple>,
        omega_x: Option<&A::Obs>,
        app: &A,
    ) -> bool {
        let gamma = self.cfg.gamma;
        self.particles.par_iter_mut().for_each(|p| {
            let mut l = 1.0;
            if let Some(o) = omega_f {
                let d = sentiment::block(&p.f, Object::Behaviour) - o;
                l *= (-0.5 * d.norm_squared() / (gamma * gamma)).exp();
            }
            if let Some(o) = omega_x {
                l *= app.obs_likelihood(&p.x, o);
            }
            p.w *= l;
        });
        let total = self.weight_sum();
        let degenerate = total.is_nan() || total < WEIGHT_FLOOR;
        if degenerate {
            let w = 1.0 / self.len() as f64;
            for p in &mut self.particles {
                if let Some(o) = omega_f {
                    sentiment::set_block(&mut p.f, Object::Behaviour, o);
                }
                p.w = w;
            }
        } else {
            self.normalize();
        }
        degenerate
    }

    /// Propagate then reweight.
    pub fn update<A: AppModel<State = S>>(
        &mut self,
        b_a: Option<&Triple>,
        a: Option<&A::Action>,
        omega_f: Option<&Triple>,
        omega_x: Option<&A::Obs>,
        eq: &EquationSet,
        app: &A,
    ) -> Result<bool, Error> {
        self.propagate(b_a, a, eq, app)?;
        Ok(self.reweight(omega_f, omega_x, app))
    }

    pub fn expected_f(&self) -> Sentiment {
        self.weighted_mean(|p| p.f)
    }

    pub fn expected_tau(&self) -> Sentiment {
        self.weighted_mean(|p| p.tau)
    }

    fn weighted_mean(&self, get: impl Fn(&Particle<S>) -> Sentiment) -> Sentiment {
        let w = self.normalized_weights();
        self.particles
            .iter()
            .zip(w)
            .fold(Sentiment::zeros(), |acc, (p, wi)| acc + get(p) * wi)
    }

    pub fn expected_identity(&self, object: Object) -> Triple {
        sentiment::block(&self.expected_f(), object)
    }

    /// Weighted mass of each distinct application state, heaviest first
    /// (ties keep first-seen order).
    pub fn x_marginal(&self) -> Vec<(S, f64)> {
        let w = self.normalized_weights();
        let mut out: Vec<(S, f64)> = Vec::new();
        for (p, wi) in self.particles.iter().zip(w) {
            match out.iter_mut().find(|(x, _)| *x == p.x) {
                Some(e) => e.1 += wi,
                None => out.push((p.x.clone(), wi)),
            }
        }
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite weights"));
        out
    }

    /// Probability of an event on the application state.
    pub fn prob(&self, pred: impl Fn(&S) -> bool) -> f64 {
        self.particles
            .iter()
            .zip(self.normalized_weights())
            .filter(|(p, _)| pred(&p.x))
            .map(|(_, w)| w)
            .sum()
    }

    /// Weighted mean of a numeric feature of the application state.
    pub fn mean_of(&self, g: impl Fn(&S) -> f64) -> f64 {
        self.particles
            .iter()
            .zip(self.normalized_weights())
            .map(|(p, w)| w * g(&p.x))
            .sum()
    }

    /// Weighted mean of the continuous parts, weighted mode of the discrete part.
    pub fn expected_state(&self) -> ExpectedState<S> {
        ExpectedState {
            f: self.expected_f(),
            tau: self.expected_tau(),
            x: self.x_marginal().swap_remove(0).0,
        }
    }

    /// `sum_i w_i |f_i - tau_i|^2`.
    pub fn expected_deflection(&self) -> f64 {
        self.particles
            .iter()
            .zip(self.normalized_weights())
            .map(|(p, w)| w * sentiment::sq_dist(&p.f, &p.tau))
            .sum()
    }

    /// Overwrite the self-identity block of every particle (used when the
    /// agent's own identity is externally driven).
    pub fn set_self_identity(&mut self, id: &Triple) {
        for p in &mut self.particles {
            sentiment::set_block(&mut p.f, Object::Actor, id);
        }
    }
}

fn roughen(f: &mut Sentiment, cfg: &AgentConfig, sigma_r: f64, rng: &mut Rng64) {
    if sigma_r <= 0.0 {
        return;
    }
    for (flag, object) in [(cfg.roughen_agent, Object::Actor), (cfg.roughen_client, Object::Client)] {
        if flag {
            for i in 0..3 {
                f[object.offset() + i] += rng.random_range(-sigma_r..=sigma_r);
            }
        }
    }
}

/// The turn shared by all particles, if they agree.
pub fn common_turn<A: AppModel>(belief: &BeliefState<A::State>, app: &A) -> Option<Turn>
where
    A::State: PartialEq,
{
    let first = app.turn(&belief.particles.first()?.x);
    belief
        .particles
        .iter()
        .all(|p| app.turn(&p.x) == first)
        .then_some(first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::app::TurnTaking;

    fn belief(n: usize) -> BeliefState<Turn> {
        let cfg = AgentConfig { n, seed: 5, ..AgentConfig::default() };
        BeliefState::init(&Triple::new(1.5, 1.5, -0.2), &Triple::new(0.4, 0.4, 0.5), cfg, |_| Turn::Agent).unwrap()
    }

    #[test]
    fn roughening_widths() {
        assert!((roughening_sigma(1000, 3, 1.0) - 0.1).abs() < 1e-12);
        assert!((roughening_sigma(8, 3, 1.0) - 0.5).abs() < 1e-12);
        assert!((roughening_sigma(300, 3, 1.0) - 0.149_380).abs() < 1e-5);
    }

    #[test]
    fn no_observation_keeps_weights() {
        let mut b = belief(10);
        let before = b.normalized_weights();
        assert!(!b.reweight::<TurnTaking>(None, None, &TurnTaking));
        assert_eq!(b.normalized_weights(), before);
    }

    #[test]
    fn exact_behaviour_gets_max_weight() {
        let mut b = belief(5);
        for (i, p) in b.particles.iter_mut().enumerate() {
            p.f[3] = i as f64 * 0.3;
        }
        let omega = sentiment::block(&b.particles[2].f, Object::Behaviour);
        b.reweight::<TurnTaking>(Some(&omega), None, &TurnTaking);
        let w = b.normalized_weights();
        let best = (0..5).max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap()).unwrap();
        assert_eq!(best, 2);
    }

    #[test]
    fn far_observation_triggers_fallback() {
        let mut b = belief(20);
        let omega = Triple::new(1e3, -1e3, 1e3);
        assert!(b.reweight::<TurnTaking>(Some(&omega), None, &TurnTaking));
        for p in &b.particles {
            assert_eq!(sentiment::block(&p.f, Object::Behaviour), omega);
            assert!(p.w > 0.0);
        }
    }

    #[test]
    fn expectations_by_hand() {
        let mut b = belief(3);
        let ws = [0.5, 0.3, 0.2];
        for (i, p) in b.particles.iter_mut().enumerate() {
            p.f = Sentiment::from_element(i as f64);
            p.tau = Sentiment::from_element(0.0);
            p.w = ws[i];
        }
        let ef = b.expected_f();
        assert!((ef[0] - (0.3 + 0.4)).abs() < 1e-12);
        let d = 0.5 * 0.0 + 0.3 * 9.0 + 0.2 * 36.0;
        assert!((b.expected_deflection() - d).abs() < 1e-12);
    }

    #[test]
    fn systematic_resampling_follows_weights() {
        let mut b = belief(4);
        let ws = [0.0, 0.5, 0.0, 0.5];
        for (p, w) in b.particles.iter_mut().zip(ws) {
            p.w = w;
        }
        let idx = b.resample_indices(&mut rng::derive(1, 0, 0));
        assert_eq!(idx.iter().filter(|&&i| i == 1).count(), 2);
        assert_eq!(idx.iter().filter(|&&i| i == 3).count(), 2);
        b.cfg.resampling = Resampling::Multinomial;
        let idx = b.resample_indices(&mut rng::derive(1, 0, 0));
        assert!(idx.iter().all(|&i| i == 1 || i == 3));
    }

    #[test]
    fn single_particle_follows_posterior_mean() {
        let eq = EquationSet::sample();
        let cfg = AgentConfig {
            n: 1,
            beta_a: 1e-9,
            beta_c: 1e-9,
            beta0_a: [1e-9; 3],
            beta0_c: [1e-9; 3],
            sigma_r: Some(0.0),
            ..AgentConfig::default()
        };
        let mut b = BeliefState::init(&Triple::new(1.0, 0.5, 0.0), &Triple::new(-0.5, 0.2, 0.1), cfg, |_| Turn::Agent).unwrap();
        let p0 = b.particles[0].clone();
        let ba = Triple::new(0.7, 0.1, -0.3);
        b.propagate(Some(&ba), Some(&()), &eq, &TurnTaking).unwrap();
        let post = fundamentals_posterior(&p0.f, &p0.tau, Turn::Agent, Some(&ba), &eq, &b.cfg).unwrap();
        let p = &b.particles[0];
        assert!((p.f - post.mean).amax() < 1e-6);
        assert_eq!(p.tau, eq.transient_update(&p0.tau, &p.f, Turn::Agent));
        assert_eq!(p.x, Turn::Client);
    }
}
