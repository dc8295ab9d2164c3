//! Bayesian affect control theory.
//!
//! An agent keeps a particle belief over 9-D EPA fundamentals and transients
//! plus an application state, predicts the other party's behaviour with a
//! probabilistic affect control principle, and picks actions that keep
//! deflection low while pursuing application goals.
//!
//! ```
//! use bayesact::prelude::*;
//!
//! let eq = EquationSet::sample();
//! let f = stack(&Triple::new(1.5, 1.5, -0.2), &Triple::zeros(), &Triple::new(1.5, 0.3, 0.8));
//! let step = interact_step(&f, &f, Turn::Agent, &eq, &DeflectionWeights::default()).unwrap();
//! assert!(step.deflection.is_finite());
//! ```

pub mod app;
pub mod coach;
pub mod data;
pub mod dynamics;
pub mod filter;
pub mod linalg;
pub mod plot;
pub mod policy;
pub mod rng;
pub mod sentiment;
pub mod service;
pub mod sim;
pub mod tutor;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("singular system (condition number {cond:.3e})")]
    Singular { cond: f64 },
    #[error("{source_name}:{line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub mod prelude {
    pub use crate::app::{AppModel, Turn};
    pub use crate::dynamics::{
        interact_step, optimal_behaviour, optimal_identity, EquationSet, GTermSpec, HcFactors, Role,
    };
    pub use crate::filter::{AgentConfig, BeliefState, Particle};
    pub use crate::policy::{greedy_action, ActionChoice, RewardWeights};
    pub use crate::sentiment::{
        block, combine, deflection, stack, DeflectionWeights, Object, Sentiment, Triple,
    };
}
