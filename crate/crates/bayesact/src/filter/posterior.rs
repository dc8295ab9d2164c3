//! Gaussian form of the affect-control posterior over fundamentals.
//!
//! With `psi = 1/2 (K f' - C)^T S^-1 (K f' - C)` and
//! `xi = 1/2 (f' - m)^T S_f^-1 (f' - m)`, the density `exp(-psi - xi)` is
//! Gaussian with precision `K^T S^-1 K + S_f^-1`.

use nalgebra::{SMatrix, SVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::AgentConfig;
use crate::app::Turn;
use crate::dynamics::{self, build_k, EquationSet, HcFactors};
use crate::sentiment::{self, DeflectionWeights, Mat9, Object, Sentiment, Triple};
use crate::Error;

type Mat6 = SMatrix<f64, 6, 6>;
type Vec6 = SVector<f64, 6>;

const FREE: [usize; 6] = [0, 1, 2, 6, 7, 8];

/// How the inertia term treats the behaviour block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum BehaviourPrior {
    /// Agent's own turn: f'_b equals the chosen behaviour exactly.
    Pinned(Triple),
    /// Client's turn, or the normative action distribution: no constraint.
    Free,
    /// Finite spread around a mean; used for analysis and tests.
    Soft { mean: Triple, beta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gaussian9 {
    pub mean: Sentiment,
    pub cov: Mat9,
    #[serde(skip)]
    chol: Mat9,
    pub pinned: Option<Triple>,
}

impl Gaussian9 {
    pub fn degenerate(mean: Sentiment) -> Self {
        Gaussian9 { mean, cov: Mat9::zeros(), chol: Mat9::zeros(), pinned: None }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Sentiment {
        let z = Sentiment::from_fn(|_, _| rng.sample(StandardNormal));
        let mut out = self.mean + self.chol * z;
        if let Some(b) = &self.pinned {
            sentiment::set_block(&mut out, Object::Behaviour, b);
        }
        out
    }

    /// Log density up to its normalising constant, over the non-pinned coordinates.
    pub fn log_kernel(&self, x: &Sentiment) -> Result<f64, Error> {
        let d = x - self.mean;
        match self.pinned {
            Some(_) => {
                let cov = Mat6::from_fn(|r, c| self.cov[(FREE[r], FREE[c])]);
                let d6 = Vec6::from_fn(|r, _| d[FREE[r]]);
                let ch = cov.cholesky().ok_or_else(|| not_pd("posterior covariance"))?;
                Ok(-0.5 * d6.dot(&ch.solve(&d6)))
            }
            None => {
                let ch = self.cov.cholesky().ok_or_else(|| not_pd("posterior covariance"))?;
                Ok(-0.5 * d.dot(&ch.solve(&d)))
            }
        }
    }

    /// Behaviour-block marginal mean and covariance.
    pub fn behaviour_marginal(&self) -> (Triple, SMatrix<f64, 3, 3>) {
        (
            sentiment::block(&self.mean, Object::Behaviour),
            self.cov.fixed_view::<3, 3>(3, 3).into_owned(),
        )
    }
}

fn not_pd(what: &str) -> Error {
    Error::Numerical(format!("{what} is not positive definite"))
}

/// Diagonal of the inertia precision for the identity blocks.
fn identity_precision(cfg: &AgentConfig) -> [f64; 9] {
    let pa = 1.0 / (cfg.beta_a * cfg.beta_a);
    let pc = 1.0 / (cfg.beta_c * cfg.beta_c);
    [pa, pa, pa, 0.0, 0.0, 0.0, pc, pc, pc]
}

/// Gaussian over f' given the previous fundamentals and the H/C factors.
pub fn gaussian_from_hc(
    f: &Sentiment,
    hc: &HcFactors,
    behaviour: BehaviourPrior,
    cfg: &AgentConfig,
) -> Result<Gaussian9, Error> {
    let k = build_k(&hc.h);
    let inv_alpha = 1.0 / cfg.alpha;
    let mut prec = k.transpose() * k * inv_alpha;
    let mut h = k.transpose() * hc.c * inv_alpha;
    let pf = identity_precision(cfg);
    for i in 0..9 {
        prec[(i, i)] += pf[i];
        h[i] += pf[i] * f[i];
    }
    match behaviour {
        BehaviourPrior::Pinned(b) => {
            let p6 = Mat6::from_fn(|r, c| prec[(FREE[r], FREE[c])]);
            let mut rhs = Vec6::from_fn(|r, _| h[FREE[r]]);
            for r in 0..6 {
                for j in 0..3 {
                    rhs[r] -= prec[(FREE[r], 3 + j)] * b[j];
                }
            }
            let ch = p6.cholesky().ok_or_else(|| not_pd("posterior precision"))?;
            let mean6 = ch.solve(&rhs);
            let cov6 = ch.inverse();
            let l6 = cov6.cholesky().ok_or_else(|| not_pd("posterior covariance"))?.l();
            let mut mean = Sentiment::zeros();
            let mut cov = Mat9::zeros();
            let mut chol = Mat9::zeros();
            for r in 0..6 {
                mean[FREE[r]] = mean6[r];
                for c in 0..6 {
                    cov[(FREE[r], FREE[c])] = cov6[(r, c)];
                    chol[(FREE[r], FREE[c])] = l6[(r, c)];
                }
            }
            sentiment::set_block(&mut mean, Object::Behaviour, &b);
            Ok(Gaussian9 { mean, cov, chol, pinned: Some(b) })
        }
        BehaviourPrior::Free | BehaviourPrior::Soft { .. } => {
            if let BehaviourPrior::Soft { mean, beta } = behaviour {
                let pb = 1.0 / (beta * beta);
                for j in 0..3 {
                    prec[(3 + j, 3 + j)] += pb;
                    h[3 + j] += pb * mean[j];
                }
            }
            let ch = prec.cholesky().ok_or_else(|| not_pd("posterior precision"))?;
            let mean = ch.solve(&h);
            let cov = ch.inverse();
            let chol = cov.cholesky().ok_or_else(|| not_pd("posterior covariance"))?.l();
            Ok(Gaussian9 { mean, cov, chol, pinned: None })
        }
    }
}

/// Posterior over next fundamentals for a particle. On the agent's turn the
/// behaviour is pinned to `b_a`; on the client's turn it is free.
pub fn fundamentals_posterior(
    f: &Sentiment,
    tau: &Sentiment,
    turn: Turn,
    b_a: Option<&Triple>,
    eq: &EquationSet,
    cfg: &AgentConfig,
) -> Result<Gaussian9, Error> {
    let prior = match (turn, b_a) {
        (Turn::Agent, Some(b)) => BehaviourPrior::Pinned(*b),
        (Turn::Agent, None) => return Err(Error::Usage("agent turn requires a behaviour".into())),
        (Turn::Client, _) => BehaviourPrior::Free,
    };
    gaussian_from_hc(f, &eq.hc(tau, turn), prior, cfg)
}

/// `psi + xi`, computed straight from the transient equations rather than via K.
pub fn neg_log_potential(
    f_prime: &Sentiment,
    f: &Sentiment,
    tau: &Sentiment,
    turn: Turn,
    behaviour: BehaviourPrior,
    eq: &EquationSet,
    cfg: &AgentConfig,
) -> f64 {
    let psi = dynamics::psi(f_prime, tau, turn, eq, &DeflectionWeights::uniform(1.0 / cfg.alpha));
    let pf = identity_precision(cfg);
    let mut xi: f64 = (0..9).map(|i| 0.5 * pf[i] * (f_prime[i] - f[i]).powi(2)).sum();
    if let BehaviourPrior::Soft { mean, beta } = behaviour {
        let fb = sentiment::block(f_prime, Object::Behaviour);
        xi += 0.5 * (fb - mean).norm_squared() / (beta * beta);
    }
    psi + xi
}
