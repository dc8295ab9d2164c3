//! Exam-practice tutor: skill and difficulty dynamics coupled to deflection,
//! success observations, and a heuristic choice of the next exercise.

mod questions;
mod statements;

pub use questions::{Question, QuestionBank};
pub use statements::{Context, Statement, StatementTable};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::app::{AppModel, Turn};
use crate::rng::Rng64;
use crate::sentiment::{self, Sentiment, Triple};

pub const LEVELS: u8 = 3;
pub const TOP: u8 = LEVELS - 1;

/// Default identities.
pub fn tutor_identity() -> Triple {
    Triple::new(1.5, 1.5, -0.2)
}

pub fn student_identity() -> Triple {
    Triple::new(1.5, 0.3, 0.8)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TutorState {
    pub difficulty: u8,
    pub skill: u8,
    pub turn: Turn,
}

/// Probability of a correct answer for `difficulty - skill` = -2..=2.
pub const SUCCESS_TABLE: [f64; 5] = [0.999, 0.99, 0.9, 0.5, 0.1];

pub fn success_probability(difficulty: u8, skill: u8) -> f64 {
    let delta = difficulty as i32 - skill as i32;
    if (-2..=2).contains(&delta) {
        SUCCESS_TABLE[(delta + 2) as usize]
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkillKernel {
    /// Multiplier `min(1, d/2)` on non-increasing rows, stay floored at 0.5.
    #[default]
    Floored,
    /// Multiplier `d/2` with no floor.
    Literal,
}

/// Distribution over the next skill level given the current one and the
/// deflection `d = |f' - tau'|^2`. Index = level.
pub fn skill_distribution(skill: u8, deflection: f64, kernel: SkillKernel) -> [f64; 3] {
    let s = skill.min(TOP) as usize;
    let mut p = [0.0; 3];
    p[s] = 0.9;
    match s {
        0 => p[1] = 0.1,
        2 => p[1] = 0.1,
        _ => {
            p[s - 1] = 0.05;
            p[s + 1] = 0.05;
        }
    }
    let raw = (deflection / 2.0).max(0.0);
    let m = match kernel {
        SkillKernel::Floored => raw.min(1.0),
        SkillKernel::Literal => raw,
    };
    for q in p.iter_mut().take(s + 1) {
        *q *= m;
    }
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        let mut stay = [0.0; 3];
        stay[s] = 1.0;
        return stay;
    }
    for q in &mut p {
        *q /= total;
    }
    if kernel == SkillKernel::Floored && p[s] < 0.5 {
        let rest = 1.0 - p[s];
        for (i, q) in p.iter_mut().enumerate() {
            *q = if i == s { 0.5 } else { *q * 0.5 / rest };
        }
    }
    p
}

fn draw(p: &[f64], rng: &mut Rng64) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, q) in p.iter().enumerate() {
        cum += q;
        if u < cum {
            return i;
        }
    }
    p.len() - 1
}

/// Same level as the rounded mean skill 90% of the time, one higher otherwise.
pub fn propositional_policy(mean_skill: f64, rng: &mut Rng64) -> u8 {
    let base = mean_skill.round().clamp(0.0, TOP as f64) as u8;
    if rng.random::<f64>() < 0.1 {
        (base + 1).min(TOP)
    } else {
        base
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TutorObs {
    pub correct: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TutorApp {
    pub kernel: SkillKernel,
}

impl AppModel for TutorApp {
    type State = TutorState;
    /// Difficulty of the next exercise.
    type Action = u8;
    type Obs = TutorObs;

    fn init_x(&self, rng: &mut Rng64) -> TutorState {
        TutorState { difficulty: 0, skill: rng.random_range(0..LEVELS), turn: Turn::Agent }
    }

    fn turn(&self, x: &TutorState) -> Turn {
        x.turn
    }

    /// After the agent's turn the student may learn, more readily when the
    /// interaction is low in deflection. The client's turn only passes the turn.
    fn sample_x(&self, x: &TutorState, f: &Sentiment, tau: &Sentiment, a: Option<&u8>, rng: &mut Rng64) -> TutorState {
        match x.turn {
            Turn::Agent => {
                let p = skill_distribution(x.skill, sentiment::sq_dist(f, tau), self.kernel);
                TutorState {
                    difficulty: a.copied().unwrap_or(x.difficulty).min(TOP),
                    skill: draw(&p, rng) as u8,
                    turn: Turn::Client,
                }
            }
            Turn::Client => TutorState { turn: Turn::Agent, ..*x },
        }
    }

    fn reward(&self, x: &TutorState, _a: Option<&u8>) -> f64 {
        -((x.skill as f64 - 2.0).powi(2))
    }

    fn obs_likelihood(&self, x: &TutorState, obs: &TutorObs) -> f64 {
        let p = success_probability(x.difficulty, x.skill);
        if obs.correct {
            p
        } else {
            1.0 - p
        }
    }

    fn action_set(&self) -> Vec<u8> {
        (0..LEVELS).collect()
    }
}
