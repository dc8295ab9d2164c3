//! Live sessions: the agent runs its filter and policy once per client act.

use serde::{Deserialize, Serialize};

use crate::app::{AppModel, Turn};
use crate::coach::{self, CoachAction, CoachApp, CoachState, PlanGraph};
use crate::data::Dictionary;
use crate::dynamics::EquationSet;
use crate::filter::{AgentConfig, BeliefState, Particle};
use crate::policy::{self, PolicyConfig};
use crate::rng;
use crate::sentiment::{Object, Triple};
use crate::tutor::{self, Context, QuestionBank, SkillKernel, StatementTable, TutorApp, TutorObs, TutorState};
use crate::Error;

/// Shared read-only inputs.
#[derive(Clone, Debug)]
pub struct Resources {
    pub eq: EquationSet,
    pub dict: Dictionary,
    pub statements: StatementTable,
    pub questions: QuestionBank,
    pub plan: PlanGraph,
}

impl Resources {
    /// The bundled sample data (or the data directory, when set).
    pub fn sample() -> Result<Self, Error> {
        Ok(Resources {
            eq: EquationSet::sample(),
            dict: Dictionary::sample()?,
            statements: StatementTable::sample()?,
            questions: QuestionBank::sample()?,
            plan: PlanGraph::handwashing()?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Tutor,
    Coach,
}

impl std::str::FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "tutor" => Ok(Kind::Tutor),
            "coach" => Ok(Kind::Coach),
            _ => Err(Error::Usage(format!("unknown session kind `{s}`"))),
        }
    }
}

/// Creation overrides; anything absent takes the per-kind default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionOverrides {
    pub n: Option<usize>,
    pub beta_a: Option<f64>,
    pub beta_c: Option<f64>,
    pub gamma: Option<f64>,
    pub sigma_r: Option<f64>,
    /// Dictionary label or `e,p,a`.
    pub agent_identity: Option<String>,
    pub client_identity: Option<String>,
    pub candidates: Option<usize>,
    pub integrand_samples: Option<usize>,
    pub kernel: Option<SkillKernel>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub agent: AgentConfig,
    pub policy: PolicyConfig,
    pub agent_identity: Triple,
    pub client_identity: Triple,
    pub kernel: SkillKernel,
    pub seed: u64,
}

impl SessionConfig {
    pub fn resolve(kind: Kind, o: &SessionOverrides, res: &Resources) -> Result<Self, Error> {
        let (agent_id, client_id, mut agent) = match kind {
            Kind::Tutor => (
                tutor::tutor_identity(),
                tutor::student_identity(),
                AgentConfig { sigma_r: Some(0.0), roughen_client: false, ..AgentConfig::default() },
            ),
            Kind::Coach => {
                let (_, sd) = res.dict.identity_gaussian()?;
                (
                    coach::assistant_identity(),
                    coach::patient_identity(),
                    AgentConfig { gamma: 0.5, beta0_c: sd.into(), roughen_client: true, ..AgentConfig::default() },
                )
            }
        };
        let seed = o.seed.unwrap_or(0);
        agent.seed = rng::sub_seed(seed, 1);
        if let Some(n) = o.n {
            agent.n = n;
        }
        if let Some(b) = o.beta_a {
            agent.beta_a = b;
        }
        if let Some(b) = o.beta_c {
            agent.beta_c = b;
        }
        if let Some(g) = o.gamma {
            agent.gamma = g;
        }
        if o.sigma_r.is_some() {
            agent.sigma_r = o.sigma_r;
        }
        if agent.n > 5000 {
            return Err(Error::Usage("at most 5000 particles per session".into()));
        }
        agent.validate()?;
        let mut policy = PolicyConfig::default();
        if let Some(c) = o.candidates {
            policy.candidates = c;
        }
        if let Some(k) = o.integrand_samples {
            policy.integrand_samples = k;
        }
        if policy.candidates == 0 || policy.candidates > 1000 || policy.integrand_samples > 1000 {
            return Err(Error::Usage("candidates must lie in 1..=1000".into()));
        }
        let id = |s: &Option<String>, d: Triple| s.as_deref().map_or(Ok(d), |s| res.dict.resolve(s));
        Ok(SessionConfig {
            agent,
            policy,
            agent_identity: id(&o.agent_identity, agent_id)?,
            client_identity: id(&o.client_identity, client_id)?,
            kernel: o.kernel.unwrap_or_default(),
            seed,
        })
    }
}

/// What the agent currently believes, without particles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub self_identity: Triple,
    pub other_identity: Triple,
    pub deflection: f64,
    /// Pr(skill = 0, 1, 2), tutor only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skill: Option<Vec<f64>>,
    /// Pr(aware), coach only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_aware: Option<f64>,
    /// Pr(planstep = k), coach only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planstep: Option<Vec<f64>>,
}

fn base_summary<S: Clone + Send + Sync + PartialEq>(b: &BeliefState<S>) -> Summary {
    Summary {
        self_identity: b.expected_identity(Object::Actor),
        other_identity: b.expected_identity(Object::Client),
        deflection: b.expected_deflection(),
        skill: None,
        p_aware: None,
        planstep: None,
    }
}

/// A question as shown to the client (no answer key).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuestionView {
    pub id: String,
    pub difficulty: u8,
    pub prompt: String,
    pub choices: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatementView {
    pub id: usize,
    pub context: Context,
    pub text: String,
    pub label: String,
    pub epa: Triple,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActRequest {
    /// Tutor: index of the chosen answer.
    pub answer_choice: Option<usize>,
    /// Tutor: row of a client statement.
    pub statement_id: Option<usize>,
    /// Coach: planstep the person is at.
    pub planstep: Option<u8>,
    /// Coach: behaviour label or `e,p,a`.
    pub behaviour: Option<String>,
    /// Rejects the act unless the session is at exactly this step.
    pub expected_step: Option<usize>,
}

/// The agent's reply to one client act.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActResponse {
    pub step: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agent_statement: Option<StatementView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next_question: Option<QuestionView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action: Option<CoachAction>,
    /// Nearest dictionary behaviour to the agent's affective action.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agent_behaviour: Option<String>,
    pub agent_epa: Option<Triple>,
    pub finished: bool,
    pub summary: Summary,
    pub deflection: f64,
}

/// Why an act was refused.
#[derive(Debug)]
pub enum ActError {
    /// Out of turn, stale `expected_step`, or finished session.
    Conflict(String),
    /// Body inconsistent with the session kind or unknown references.
    Invalid(String),
    Engine(Error),
}

impl From<Error> for ActError {
    fn from(e: Error) -> Self {
        ActError::Engine(e)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ParticleView<S> {
    pub f: Vec<f64>,
    pub tau: Vec<f64>,
    pub x: S,
    pub w: f64,
}

fn particle_views<S: Clone>(ps: &[Particle<S>]) -> Vec<ParticleView<S>> {
    ps.iter()
        .map(|p| ParticleView { f: p.f.iter().copied().collect(), tau: p.tau.iter().copied().collect(), x: p.x.clone(), w: p.w })
        .collect()
}

#[derive(Clone, Debug)]
enum Engine {
    Tutor { app: TutorApp, belief: BeliefState<TutorState>, question: Option<String> },
    Coach { app: CoachApp, belief: BeliefState<CoachState> },
}

#[derive(Clone, Debug)]
pub struct Session {
    pub kind: Kind,
    pub config: SessionConfig,
    pub step: usize,
    pub finished: bool,
    /// Client acts and agent replies so far.
    pub trace: Vec<(ActRequest, ActResponse)>,
    /// The agent's opening move, if any.
    pub opening: Option<ActResponse>,
    engine: Engine,
}

impl Session {
    pub fn new(kind: Kind, config: SessionConfig, res: &Resources) -> Result<Self, Error> {
        let engine = match kind {
            Kind::Tutor => {
                let app = TutorApp { kernel: config.kernel };
                let belief =
                    BeliefState::init(&config.agent_identity, &config.client_identity, config.agent.clone(), |r| app.init_x(r))?;
                Engine::Tutor { app, belief, question: None }
            }
            Kind::Coach => {
                let app = CoachApp::new(res.plan.clone());
                let belief =
                    BeliefState::init(&config.agent_identity, &config.client_identity, config.agent.clone(), |r| app.init_x(r))?;
                Engine::Coach { app, belief }
            }
        };
        let mut s = Session { kind, config, step: 0, finished: false, trace: Vec::new(), opening: None, engine };
        if kind == Kind::Tutor {
            s.opening = Some(s.tutor_agent_move(true, res)?);
        }
        Ok(s)
    }

    pub fn summary(&self) -> Summary {
        match &self.engine {
            Engine::Tutor { belief, .. } => {
                let mut s = base_summary(belief);
                s.skill = Some((0..tutor::LEVELS).map(|k| belief.prob(|x| x.skill == k)).collect());
                s
            }
            Engine::Coach { belief, app } => {
                let mut s = base_summary(belief);
                s.p_aware = Some(belief.prob(|x| x.aware));
                s.planstep = Some((0..=app.graph.terminal).map(|k| belief.prob(|x| x.ps == k)).collect());
                s
            }
        }
    }

    pub fn particles_json(&self) -> serde_json::Value {
        match &self.engine {
            Engine::Tutor { belief, .. } => serde_json::to_value(particle_views(&belief.particles)),
            Engine::Coach { belief, .. } => serde_json::to_value(particle_views(&belief.particles)),
        }
        .unwrap_or(serde_json::Value::Null)
    }

    pub fn current_question(&self, res: &Resources) -> Option<QuestionView> {
        match &self.engine {
            Engine::Tutor { question: Some(id), .. } => res.questions.get(id).map(question_view),
            _ => None,
        }
    }

    pub fn act(&mut self, req: &ActRequest, res: &Resources) -> Result<ActResponse, ActError> {
        if let Some(want) = req.expected_step {
            if want != self.step {
                return Err(ActError::Conflict(format!("session is at step {}, not {want}", self.step)));
            }
        }
        if self.finished {
            return Err(ActError::Conflict("session is finished".into()));
        }
        let out = match self.kind {
            Kind::Tutor => self.tutor_act(req, res)?,
            Kind::Coach => self.coach_act(req, res)?,
        };
        self.trace.push((req.clone(), out.clone()));
        Ok(out)
    }

    fn tutor_act(&mut self, req: &ActRequest, res: &Resources) -> Result<ActResponse, ActError> {
        if req.planstep.is_some() || req.behaviour.is_some() {
            return Err(ActError::Invalid("tutor sessions take answer_choice and statement_id".into()));
        }
        let Engine::Tutor { app, belief, question } = &mut self.engine else { unreachable!() };
        let turn = crate::filter::common_turn(belief, app);
        if turn != Some(Turn::Client) {
            return Err(ActError::Conflict("not the client's turn".into()));
        }
        let q = question.as_deref().and_then(|id| res.questions.get(id));
        let choice = req.answer_choice.ok_or_else(|| ActError::Invalid("answer_choice is required".into()))?;
        let correct = match q {
            Some(q) if choice >= q.choices.len() => {
                return Err(ActError::Invalid(format!("answer_choice {choice} out of range")));
            }
            Some(q) => choice == q.answer_index,
            None => false,
        };
        let omega_f = match req.statement_id {
            None => None,
            Some(id) => {
                let s = res.statements.get(id).ok_or_else(|| ActError::Invalid(format!("unknown statement {id}")))?;
                if !matches!(s.context, Context::ClientCorrect | Context::ClientIncorrect) {
                    return Err(ActError::Invalid(format!("statement {id} is not a client statement")));
                }
                Some(s.epa)
            }
        };
        belief.update(None, None, omega_f.as_ref(), Some(&TutorObs { correct }), &res.eq, app)?;
        self.step += 1;
        let mut out = self.tutor_agent_move(correct, res)?;
        out.feedback = Some(if correct { "correct" } else { "incorrect" }.into());
        Ok(out)
    }

    /// Pick the next exercise and the affective reply, then advance the belief.
    fn tutor_agent_move(&mut self, correct: bool, res: &Resources) -> Result<ActResponse, Error> {
        let step = self.step;
        let seed = self.config.seed;
        let pcfg = self.config.policy;
        let Engine::Tutor { app, belief, question } = &mut self.engine else { unreachable!() };
        let mut r = rng::derive(rng::sub_seed(seed, 3), step as u64, 0);
        let difficulty = tutor::propositional_policy(belief.mean_of(|x| x.skill as f64), &mut r);
        let choice = policy::greedy_over(belief, &[difficulty], app, &res.eq, &pcfg, rng::sub_seed(seed, 4))?;
        let context = Context::agent(correct);
        let st = res
            .statements
            .nearest(&choice.b_a, context)
            .ok_or_else(|| Error::Usage(format!("no statements for context {context}")))?;
        belief.propagate(Some(&st.epa), Some(&difficulty), &res.eq, app)?;
        let q = res.questions.pick(difficulty, &mut r);
        *question = q.map(|q| q.id.clone());
        let summary = self.summary();
        Ok(ActResponse {
            step,
            feedback: None,
            agent_statement: Some(statement_view(st)),
            next_question: q.map(question_view),
            action: None,
            agent_behaviour: Some(st.label.clone()),
            agent_epa: Some(st.epa),
            finished: false,
            deflection: summary.deflection,
            summary,
        })
    }

    fn coach_act(&mut self, req: &ActRequest, res: &Resources) -> Result<ActResponse, ActError> {
        if req.answer_choice.is_some() || req.statement_id.is_some() {
            return Err(ActError::Invalid("coach sessions take planstep and behaviour".into()));
        }
        let step = self.step;
        let seed = self.config.seed;
        let candidates = self.config.policy.candidates;
        let Engine::Coach { app, belief } = &mut self.engine else { unreachable!() };
        if crate::filter::common_turn(belief, app) != Some(Turn::Client) {
            return Err(ActError::Conflict("not the client's turn".into()));
        }
        if let Some(ps) = req.planstep {
            if ps > app.graph.terminal {
                return Err(ActError::Invalid(format!("planstep {ps} beyond {}", app.graph.terminal)));
            }
        }
        let omega_f = match &req.behaviour {
            None => None,
            Some(b) => Some(res.dict.resolve(b).map_err(|e| ActError::Invalid(e.to_string()))?),
        };
        belief.update(None, None, omega_f.as_ref(), req.planstep.as_ref(), &res.eq, app)?;
        self.step += 1;
        if req.planstep == Some(app.graph.terminal) {
            self.finished = true;
            let summary = self.summary();
            return Ok(ActResponse {
                step,
                feedback: Some("task complete".into()),
                agent_statement: None,
                next_question: None,
                action: None,
                agent_behaviour: None,
                agent_epa: None,
                finished: true,
                deflection: summary.deflection,
                summary,
            });
        }
        let a = coach::prompt_policy(belief, &app.graph);
        let g = policy::pi_dagger(belief, &res.eq)?;
        let mut r = rng::derive(rng::sub_seed(seed, 6), step as u64, 0);
        let b = policy::mean_behaviour(&g, candidates, &mut r);
        belief.propagate(Some(&b), Some(&a), &res.eq, app)?;
        let label = res.dict.nearest("behaviour", &b).map(|e| e.label.clone());
        let summary = self.summary();
        Ok(ActResponse {
            step,
            feedback: None,
            agent_statement: None,
            next_question: None,
            action: Some(a),
            agent_behaviour: label,
            agent_epa: Some(b),
            finished: false,
            deflection: summary.deflection,
            summary,
        })
    }
}

fn question_view(q: &tutor::Question) -> QuestionView {
    QuestionView { id: q.id.clone(), difficulty: q.difficulty, prompt: q.prompt.clone(), choices: q.choices.clone() }
}

pub(crate) fn statement_view(s: &tutor::Statement) -> StatementView {
    StatementView { id: s.id, context: s.context, text: s.text.clone(), label: s.label.clone(), epa: s.epa }
}
