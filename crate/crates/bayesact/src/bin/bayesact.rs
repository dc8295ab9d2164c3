use std::fs::{self, File};
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use bayesact::app::Turn;
use bayesact::coach::{self, AffectPolicy, CoachApp, CoachConfig, PlanGraph};
use bayesact::data::{Dictionary, DATA_ENV};
use bayesact::dynamics::{interact_step, EquationSet};
use bayesact::plot;
use bayesact::sentiment::{self, DeflectionWeights, Object, Triple};
use bayesact::service::{self, AppState, Resources};
use bayesact::sim::{self, DynamicSweep, Mode, StaticSweep};

/// Bayesian affect control: simulations, oracle, COACH comparison and the tutor service.
///
/// Every flag can also come from `--config file.json`, an object keyed by flag
/// name (`n-samples` or `n_samples`); lists may be JSON arrays. Flags given on
/// the command line win.
#[derive(Parser)]
#[command(name = "bayesact", version, args_override_self = true)]
struct Cli {
    /// JSON file of flag values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory holding dictionary.csv, tutor_statements.csv, questions.json,
    /// handwash_plan.json; missing files fall back to the bundled samples.
    #[arg(long, global = true, env = DATA_ENV)]
    data: Option<PathBuf>,
    /// Impression-formation equation file (default: bundled sample).
    #[arg(long, global = true)]
    equations: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Agent-versus-agent identity simulations
    #[command(subcommand)]
    Sim(SimCmd),
    /// Deterministic affect-control reference
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Hand-washing assistant experiments
    #[command(subcommand)]
    Coach(CoachCmd),
    /// Live tutor and assistant sessions over HTTP
    #[command(subcommand)]
    Tutor(TutorCmd),
}

#[derive(Subcommand)]
enum SimCmd {
    /// Identity learning with fixed identities.
    Static(StaticArgs),
    /// Tracking a client whose identity moves.
    Dynamic(DynamicArgs),
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Classic deterministic affect-control steps.
    Step(OracleArgs),
}

#[derive(Subcommand)]
enum CoachCmd {
    /// Fixed versus BayesAct affective prompting on simulated people.
    Compare(CoachArgs),
}

#[derive(Subcommand)]
enum TutorCmd {
    /// HTTP session API.
    Serve(ServeArgs),
}

#[derive(Args)]
struct StaticArgs {
    /// Particle counts (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 50, 100])]
    n_samples: Vec<usize>,
    /// Environment noise levels (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.01, 0.1, 0.5, 1.0, 2.0])]
    env_noise: Vec<f64>,
    /// both-known, agent-id-known, hidden (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [Mode::Hidden])]
    mode: Vec<Mode>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.001)]
    beta: f64,
    #[arg(long, default_value_t = 100)]
    candidates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct DynamicArgs {
    /// Identity speeds (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [0.1])]
    speed: Vec<f64>,
    /// Steps to wait at each end; omit to shift once and stay.
    #[arg(long)]
    dwell: Option<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5])]
    env_noise: Vec<f64>,
    #[arg(long, default_value_t = 250)]
    n_samples: usize,
    #[arg(long, default_value_t = 10)]
    episodes: usize,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    /// First step of motion.
    #[arg(long, default_value_t = 10)]
    start: usize,
    /// Id-deflection thresholds for counting frames (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0])]
    threshold: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long, default_value_t = 100)]
    candidates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write one JSONL trace of a single episode per speed.
    #[arg(long)]
    trace: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Actor identity: dictionary label or e,p,a.
    #[arg(long)]
    actor: Option<String>,
    #[arg(long)]
    object: Option<String>,
    /// Number of alternating optimal steps to print.
    #[arg(long, default_value_t = 1)]
    steps: usize,
    /// Read `actor;object[;behaviour]` lines from stdin instead.
    #[arg(long)]
    repl: bool,
}

#[derive(Args)]
struct CoachArgs {
    /// Simulated people: dictionary labels or e,p,a (comma separated labels only).
    #[arg(long, value_delimiter = ',', default_values_t = ["elder".to_string(), "boss".to_string()])]
    clients: Vec<String>,
    /// bayesact, or a behaviour label used whenever the assistant prompts.
    #[arg(long, value_delimiter = ',', default_values_t = ["bayesact".to_string(), "command".to_string(), "prompt".to_string(), "confer with".to_string()])]
    policies: Vec<String>,
    /// Behaviour used by fixed policies when not prompting.
    #[arg(long, default_value = "mind")]
    idle: String,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 300)]
    n_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Plan graph JSON (default: bundled handwashing graph).
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Append a JSON-lines journal per session here.
    #[arg(long)]
    journal: Option<PathBuf>,
}

/// Turn a JSON config object into flags, placed right after the subcommand so
/// that command-line flags (which come later) override them.
fn merge_config(mut argv: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    let mut i = 0;
    while i < argv.len() {
        if argv[i] == "--config" && i + 1 < argv.len() {
            path = Some(argv.remove(i + 1));
            argv.remove(i);
        } else if let Some(p) = argv[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            argv.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let Value::Object(map) = serde_json::from_str::<Value>(&text).with_context(|| format!("parsing config {path}"))?
    else {
        bail!("config {path} must be a JSON object");
    };
    let mut extra = Vec::new();
    for (k, v) in map {
        let flag = format!("--{}", k.replace('_', "-"));
        let scalar = |v: &Value| match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            other => bail!("config key `{k}`: unsupported value {other}"),
        };
        match &v {
            Value::Bool(true) => extra.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts: Result<Vec<String>> = items.iter().map(scalar).collect();
                extra.push(format!("{flag}={}", parts?.join(",")));
            }
            other => extra.push(format!("{flag}={}", scalar(other)?)),
        }
    }
    let groups = ["sim", "oracle", "coach", "tutor"];
    let at = argv
        .windows(2)
        .position(|w| groups.contains(&w[0].as_str()) && !w[1].starts_with('-'))
        .map(|p| p + 2)
        .unwrap_or(argv.len());
    argv.splice(at..at, extra);
    Ok(argv)
}

fn load_equations(cli: &Cli) -> Result<EquationSet> {
    Ok(match &cli.equations {
        Some(p) => EquationSet::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => EquationSet::sample(),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn run_static(a: &StaticArgs, eq: &EquationSet, dict: &Dictionary) -> Result<()> {
    let cfg = StaticSweep {
        trials: a.trials,
        reps: a.reps,
        steps: a.steps,
        n_list: a.n_samples.clone(),
        sigma_e_list: a.env_noise.clone(),
        modes: a.mode.clone(),
        alpha: a.alpha,
        beta: a.beta,
        candidates: a.candidates,
        seed: a.seed,
    };
    let cells = sim::run_static_sweep(&cfg, eq, dict)?;
    fs::create_dir_all(&a.out)?;
    sim::static_csv(&cells, create(&a.out.join("static.csv"))?)?;
    // One line per N: median agent id-deflection against the noise levels.
    for mode in &cfg.modes {
        let series: Vec<Vec<f64>> = cfg
            .n_list
            .iter()
            .map(|&n| {
                cells
                    .iter()
                    .filter(|c| c.mode == *mode && c.n == n)
                    .map(|c| c.agent_id_deflection.median)
                    .collect()
            })
            .collect();
        plot::line_plot(&series, &a.out.join(format!("static_{mode}.png")))?;
    }
    sim::static_csv(&cells, io::stdout().lock())?;
    Ok(())
}

fn run_dynamic(a: &DynamicArgs, eq: &EquationSet, dict: &Dictionary) -> Result<()> {
    let cfg = DynamicSweep {
        episodes: a.episodes,
        steps: a.steps,
        n: a.n_samples,
        speeds: a.speed.clone(),
        sigma_e_list: a.env_noise.clone(),
        dwell: a.dwell,
        start: a.start,
        thresholds: a.threshold.clone(),
        alpha: a.alpha,
        beta: a.beta,
        candidates: a.candidates,
        seed: a.seed,
    };
    let cells = sim::run_dynamic_sweep(&cfg, eq, dict)?;
    fs::create_dir_all(&a.out)?;
    sim::dynamic_csv(&cells, &cfg.thresholds, create(&a.out.join("dynamic.csv"))?)?;
    let groups: Vec<Vec<f64>> = cells.iter().map(|c| c.deflected_frames.iter().map(|(_, s)| s.mean).collect()).collect();
    plot::bar_plot(&groups, &a.out.join("dynamic_frames.png"))?;
    if a.trace {
        for (k, &speed) in cfg.speeds.iter().enumerate() {
            let (agent_id, from) = sim::sample_pair(dict, bayesact::rng::sub_seed(cfg.seed, 2000))?;
            let (_, to) = sim::sample_pair(dict, bayesact::rng::sub_seed(cfg.seed, 3000))?;
            let spec = sim::EpisodeSpec {
                agent_id,
                client_id: from,
                n: cfg.n,
                sigma_e: cfg.sigma_e_list.first().copied().unwrap_or(0.0),
                steps: cfg.steps,
                alpha: cfg.alpha,
                beta: cfg.beta,
                beta0_known: 0.01,
                shift: Some(sim::Shift { target: to, speed, start: cfg.start, dwell: cfg.dwell }),
                seed: cfg.seed,
                ..sim::EpisodeSpec::default()
            };
            let tr = sim::run_episode(&spec, eq, dict)?;
            tr.write_jsonl(create(&a.out.join(format!("trace_{k}.jsonl")))?)?;
            let truth: Vec<f64> = tr.steps.iter().map(|s| s.true_client_id[0]).collect();
            let est: Vec<f64> = tr.steps.iter().map(|s| s.agent.other_id[0]).collect();
            plot::line_plot(&[truth, est], &a.out.join(format!("trace_{k}_e.png")))?;
        }
    }
    sim::dynamic_csv(&cells, &cfg.thresholds, io::stdout().lock())?;
    Ok(())
}

fn oracle_line(actor: &Triple, object: &Triple, behaviour: Option<&Triple>, steps: usize, eq: &EquationSet) -> Result<()> {
    let w = DeflectionWeights::default();
    let f = sentiment::stack(actor, &Triple::zeros(), object);
    let mut tau = f;
    let mut out = io::stdout().lock();
    if let Some(b) = behaviour {
        let fp = sentiment::with_behaviour(&f, b);
        let next = eq.transient_update(&tau, &fp, Turn::Agent);
        let row = serde_json::json!({
            "behaviour": b,
            "transient": next.iter().collect::<Vec<_>>(),
            "deflection": sentiment::deflection(&fp, &next, &w),
        });
        writeln!(out, "{row}")?;
        return Ok(());
    }
    for t in 0..steps {
        let turn = if t % 2 == 0 { Turn::Agent } else { Turn::Client };
        let s = interact_step(&f, &tau, turn, eq, &w)?;
        tau = s.tau;
        let row = serde_json::json!({
            "step": t,
            "turn": turn,
            "behaviour": s.behaviour,
            "actor_transient": sentiment::block(&tau, Object::Actor),
            "object_transient": sentiment::block(&tau, Object::Client),
            "deflection": s.deflection,
        });
        writeln!(out, "{row}")?;
    }
    Ok(())
}

fn run_oracle(a: &OracleArgs, eq: &EquationSet, dict: &Dictionary) -> Result<()> {
    if a.repl {
        for line in io::stdin().lock().lines() {
            let line = line?;
            let parts: Vec<&str> = line.split(';').map(str::trim).collect();
            if parts.len() < 2 || parts[0].is_empty() {
                continue;
            }
            let res = (|| -> Result<()> {
                let b = parts.get(2).filter(|s| !s.is_empty()).map(|s| dict.resolve(s)).transpose()?;
                oracle_line(&dict.resolve(parts[0])?, &dict.resolve(parts[1])?, b.as_ref(), a.steps, eq)
            })();
            if let Err(e) = res {
                eprintln!("error: {e}");
            }
        }
        return Ok(());
    }
    let (Some(actor), Some(object)) = (&a.actor, &a.object) else {
        bail!("give --actor and --object, or --repl");
    };
    oracle_line(&dict.resolve(actor)?, &dict.resolve(object)?, None, a.steps, eq)
}

fn run_coach(a: &CoachArgs, eq: &EquationSet, dict: &Dictionary) -> Result<()> {
    let graph = match &a.plan {
        Some(p) => PlanGraph::load(p)?,
        None => PlanGraph::handwashing()?,
    };
    let app = CoachApp::new(graph);
    let cfg = CoachConfig { n: a.n_samples, ..CoachConfig::default() };
    fs::create_dir_all(&a.out)?;
    let mut wtr = csv::Writer::from_writer(create(&a.out.join("coach.csv"))?);
    wtr.write_record([
        "client",
        "policy",
        "trials",
        "mean_interactions",
        "se_interactions",
        "mean_last_planstep",
        "se_last_planstep",
        "finished",
    ])?;
    let mut groups = Vec::new();
    for client in &a.clients {
        let id = dict.resolve(client)?;
        let mut bars = Vec::new();
        for p in &a.policies {
            let affect = if p == "bayesact" { AffectPolicy::BayesAct } else { AffectPolicy::fixed(p, &a.idle, dict)? };
            let s = coach::coach_experiment(client, &id, &affect, a.trials, &app, eq, dict, &cfg, a.seed)?;
            println!(
                "{client:>10} {p:>12}: interactions {:.1} ± {:.1}, last planstep {:.1} ± {:.1}, finished {}/{}",
                s.mean_interactions, s.se_interactions, s.mean_last_planstep, s.se_last_planstep, s.finished, s.trials
            );
            wtr.write_record([
                client.clone(),
                p.clone(),
                s.trials.to_string(),
                format!("{:.3}", s.mean_interactions),
                format!("{:.3}", s.se_interactions),
                format!("{:.3}", s.mean_last_planstep),
                format!("{:.3}", s.se_last_planstep),
                s.finished.to_string(),
            ])?;
            bars.push(s.mean_interactions);
        }
        groups.push(bars);
    }
    wtr.flush()?;
    plot::bar_plot(&groups, &a.out.join("coach.png"))?;
    Ok(())
}

fn run_serve(a: &ServeArgs) -> Result<()> {
    let mut state = AppState::new(Resources::sample()?);
    if let Some(dir) = &a.journal {
        fs::create_dir_all(dir)?;
        state = state.with_journal(dir.clone());
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(service::serve(Arc::new(state), a.port))?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse_from(merge_config(std::env::args().collect())?);
    if let Some(d) = &cli.data {
        // Read by every loader in the library.
        std::env::set_var(DATA_ENV, d);
    }
    let eq = load_equations(&cli)?;
    let dict = Dictionary::sample()?;
    match &cli.cmd {
        Cmd::Sim(SimCmd::Static(a)) => run_static(a, &eq, &dict),
        Cmd::Sim(SimCmd::Dynamic(a)) => run_dynamic(a, &eq, &dict),
        Cmd::Oracle(OracleCmd::Step(a)) => run_oracle(a, &eq, &dict),
        Cmd::Coach(CoachCmd::Compare(a)) => run_coach(a, &eq, &dict),
        Cmd::Tutor(TutorCmd::Serve(a)) => run_serve(a),
    }
}
