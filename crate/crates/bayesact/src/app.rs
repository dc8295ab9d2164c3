//! Application plug-in contract and turn bookkeeping.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::rng::Rng64;
use crate::sentiment::Sentiment;

/// Whose move it is, from the point of view of the agent holding the belief.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Turn {
    Agent,
    Client,
}

impl Turn {
    pub fn other(self) -> Turn {
        match self {
            Turn::Agent => Turn::Client,
            Turn::Client => Turn::Agent,
        }
    }
}

/// What an application supplies to the engine.
///
/// `sample_x` must be a proper stochastic kernel; `reward` is the application
/// term R_x and must be finite.
pub trait AppModel: Sync {
    type State: Clone + Send + Sync + Debug + PartialEq + Serialize;
    type Action: Clone + Send + Sync + Debug + Serialize;
    type Obs: Sync + Debug;

    fn init_x(&self, rng: &mut Rng64) -> Self::State;

    fn turn(&self, x: &Self::State) -> Turn;

    fn sample_x(
        &self,
        x: &Self::State,
        f_prime: &Sentiment,
        tau_prime: &Sentiment,
        a: Option<&Self::Action>,
        rng: &mut Rng64,
    ) -> Self::State;

    fn reward(&self, x: &Self::State, a: Option<&Self::Action>) -> f64;

    fn obs_likelihood(&self, x: &Self::State, obs: &Self::Obs) -> f64;

    fn action_set(&self) -> Vec<Self::Action>;
}

/// The bare interaction of the identity simulations: nothing but alternating turns.
#[derive(Clone, Copy, Debug, Default)]
pub struct TurnTaking;

impl AppModel for TurnTaking {
    type State = Turn;
    type Action = ();
    type Obs = ();

    fn init_x(&self, _rng: &mut Rng64) -> Turn {
        Turn::Agent
    }

    fn turn(&self, x: &Turn) -> Turn {
        *x
    }

    fn sample_x(&self, x: &Turn, _f: &Sentiment, _t: &Sentiment, _a: Option<&()>, _rng: &mut Rng64) -> Turn {
        x.other()
    }

    fn reward(&self, _x: &Turn, _a: Option<&()>) -> f64 {
        0.0
    }

    fn obs_likelihood(&self, _x: &Turn, _obs: &()) -> f64 {
        1.0
    }

    fn action_set(&self) -> Vec<()> {
        vec![()]
    }
}
