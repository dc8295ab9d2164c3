use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_episode, sample_pair, EpisodeSpec, EpisodeTrace, Mode, Shift};
use crate::data::Dictionary;
use crate::dynamics::EquationSet;
use crate::rng;
use crate::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(v: &[f64]) -> Self {
        if v.is_empty() {
            return Stats { mean: f64::NAN, sd: f64::NAN, median: f64::NAN, max: f64::NAN };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.total_cmp(b));
        let median = if s.len() % 2 == 1 { s[s.len() / 2] } else { 0.5 * (s[s.len() / 2 - 1] + s[s.len() / 2]) };
        Stats { mean, sd, median, max: s[s.len() - 1] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StaticSweep {
    pub trials: usize,
    pub reps: usize,
    pub steps: usize,
    pub n_list: Vec<usize>,
    pub sigma_e_list: Vec<f64>,
    pub modes: Vec<Mode>,
    pub alpha: f64,
    pub beta: f64,
    pub candidates: usize,
    pub seed: u64,
}

impl Default for StaticSweep {
    fn default() -> Self {
        StaticSweep {
            trials: 20,
            reps: 10,
            steps: 50,
            n_list: vec![5, 10, 50, 100],
            sigma_e_list: vec![0.0, 0.01, 0.1, 0.5, 1.0, 2.0],
            modes: vec![Mode::Hidden],
            alpha: 0.5,
            beta: 0.001,
            candidates: 100,
            seed: 0,
        }
    }
}

/// One row of the static table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticCell {
    pub mode: Mode,
    pub n: usize,
    pub sigma_e: f64,
    pub episodes: usize,
    pub agent_id_deflection: Stats,
    pub client_id_deflection: Stats,
    pub agent_deflection: Stats,
    pub client_deflection: Stats,
    /// Largest deflection seen at any step of any episode.
    pub agent_max_deflection: f64,
    pub client_max_deflection: f64,
    /// Final agent id-deflection of every episode, in run order.
    pub agent_id_finals: Vec<f64>,
}

fn max_of(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(f64::NEG_INFINITY, f64::max)
}

fn mean_of(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn summarise_static(mode: Mode, n: usize, sigma_e: f64, eps: &[EpisodeTrace]) -> StaticCell {
    let col = |g: &dyn Fn(&EpisodeTrace) -> f64| -> Vec<f64> { eps.iter().map(g).collect() };
    StaticCell {
        mode,
        n,
        sigma_e,
        episodes: eps.len(),
        agent_id_deflection: Stats::of(&col(&|e| e.final_agent_id_deflection())),
        client_id_deflection: Stats::of(&col(&|e| e.final_client_id_deflection())),
        agent_deflection: Stats::of(&col(&|e| mean_of(e.steps.iter().map(|s| s.agent.deflection)))),
        client_deflection: Stats::of(&col(&|e| mean_of(e.steps.iter().map(|s| s.client.deflection)))),
        agent_max_deflection: max_of(eps.iter().flat_map(|e| e.steps.iter().map(|s| s.agent.deflection))),
        client_max_deflection: max_of(eps.iter().flat_map(|e| e.steps.iter().map(|s| s.client.deflection))),
        agent_id_finals: col(&|e| e.final_agent_id_deflection()),
    }
}

/// Every (mode, N, noise) cell over `trials` identity pairs with `reps` runs each.
pub fn run_static_sweep(cfg: &StaticSweep, eq: &EquationSet, dict: &Dictionary) -> Result<Vec<StaticCell>, Error> {
    let pairs: Vec<_> = (0..cfg.trials)
        .map(|t| sample_pair(dict, rng::sub_seed(cfg.seed, 1000 + t as u64)))
        .collect::<Result<_, _>>()?;
    let mut cells = Vec::new();
    for &mode in &cfg.modes {
        for &n in &cfg.n_list {
            for &sigma_e in &cfg.sigma_e_list {
                cells.push((mode, n, sigma_e));
            }
        }
    }
    cells
        .par_iter()
        .enumerate()
        .map(|(ci, &(mode, n, sigma_e))| {
            let eps: Vec<EpisodeTrace> = (0..cfg.trials * cfg.reps)
                .into_par_iter()
                .map(|k| {
                    let (agent_id, client_id) = pairs[k / cfg.reps.max(1)];
                    let spec = EpisodeSpec {
                        agent_id,
                        client_id,
                        mode,
                        n,
                        sigma_e,
                        steps: cfg.steps,
                        alpha: cfg.alpha,
                        beta: cfg.beta,
                        candidates: cfg.candidates,
                        seed: rng::sub_seed(cfg.seed, ((ci as u64) << 32) | k as u64),
                        ..EpisodeSpec::default()
                    };
                    run_episode(&spec, eq, dict)
                })
                .collect::<Result<_, _>>()?;
            Ok(summarise_static(mode, n, sigma_e, &eps))
        })
        .collect()
}

const STATIC_HEADER: [&str; 15] = [
    "mode",
    "n",
    "sigma_e",
    "episodes",
    "agent_id_defl_mean",
    "agent_id_defl_sd",
    "agent_id_defl_median",
    "client_id_defl_mean",
    "client_id_defl_sd",
    "agent_defl_mean",
    "agent_defl_sd",
    "client_defl_mean",
    "client_defl_sd",
    "agent_defl_max",
    "client_defl_max",
];

fn num(x: f64) -> String {
    format!("{x:.6}")
}

pub fn static_csv<W: Write>(cells: &[StaticCell], w: W) -> Result<(), Error> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(STATIC_HEADER)?;
    for c in cells {
        wtr.write_record([
            c.mode.to_string(),
            c.n.to_string(),
            num(c.sigma_e),
            c.episodes.to_string(),
            num(c.agent_id_deflection.mean),
            num(c.agent_id_deflection.sd),
            num(c.agent_id_deflection.median),
            num(c.client_id_deflection.mean),
            num(c.client_id_deflection.sd),
            num(c.agent_deflection.mean),
            num(c.agent_deflection.sd),
            num(c.client_deflection.mean),
            num(c.client_deflection.sd),
            num(c.agent_max_deflection),
            num(c.client_max_deflection),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicSweep {
    pub episodes: usize,
    pub steps: usize,
    pub n: usize,
    pub speeds: Vec<f64>,
    pub sigma_e_list: Vec<f64>,
    /// Wait at each end; `None` shifts once and stays.
    pub dwell: Option<usize>,
    pub start: usize,
    pub thresholds: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub candidates: usize,
    pub seed: u64,
}

impl Default for DynamicSweep {
    fn default() -> Self {
        DynamicSweep {
            episodes: 10,
            steps: 200,
            n: 250,
            speeds: vec![0.01, 0.05, 0.1, 0.25, 0.5, 1.0],
            sigma_e_list: vec![0.01, 0.1, 0.5, 1.0],
            dwell: None,
            start: 10,
            thresholds: vec![1.0, 2.0, 3.0, 5.0],
            alpha: 0.5,
            beta: 0.01,
            candidates: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicCell {
    pub speed: f64,
    pub sigma_e: f64,
    pub n: usize,
    pub episodes: usize,
    pub final_id_deflection: Stats,
    pub deflection: Stats,
    /// One entry per threshold, in sweep order.
    pub deflected_frames: Vec<(f64, Stats)>,
}

/// The client changes identity in a straight line at each speed; counts the
/// steps at which the agent's estimate is off by more than each threshold.
pub fn run_dynamic_sweep(cfg: &DynamicSweep, eq: &EquationSet, dict: &Dictionary) -> Result<Vec<DynamicCell>, Error> {
    let mut cells = Vec::new();
    for &speed in &cfg.speeds {
        for &sigma_e in &cfg.sigma_e_list {
            cells.push((speed, sigma_e));
        }
    }
    cells
        .par_iter()
        .enumerate()
        .map(|(ci, &(speed, sigma_e))| {
            let eps: Vec<EpisodeTrace> = (0..cfg.episodes)
                .into_par_iter()
                .map(|k| {
                    let (agent_id, from) = sample_pair(dict, rng::sub_seed(cfg.seed, 2000 + k as u64))?;
                    let (_, to) = sample_pair(dict, rng::sub_seed(cfg.seed, 3000 + k as u64))?;
                    let spec = EpisodeSpec {
                        agent_id,
                        client_id: from,
                        mode: Mode::Hidden,
                        n: cfg.n,
                        sigma_e,
                        steps: cfg.steps,
                        alpha: cfg.alpha,
                        beta: cfg.beta,
                        beta0_known: 0.01,
                        candidates: cfg.candidates,
                        shift: Some(Shift { target: to, speed, start: cfg.start, dwell: cfg.dwell }),
                        seed: rng::sub_seed(cfg.seed, ((ci as u64) << 32) | k as u64),
                    };
                    run_episode(&spec, eq, dict)
                })
                .collect::<Result<_, Error>>()?;
            let col = |g: &dyn Fn(&EpisodeTrace) -> f64| -> Vec<f64> { eps.iter().map(g).collect() };
            Ok(DynamicCell {
                speed,
                sigma_e,
                n: cfg.n,
                episodes: eps.len(),
                final_id_deflection: Stats::of(&col(&|e| e.final_agent_id_deflection())),
                deflection: Stats::of(&col(&|e| mean_of(e.steps.iter().map(|s| s.agent.deflection)))),
                deflected_frames: cfg
                    .thresholds
                    .iter()
                    .map(|&d| (d, Stats::of(&col(&|e| e.deflected_frames(d) as f64))))
                    .collect(),
            })
        })
        .collect()
}

pub fn dynamic_csv<W: Write>(cells: &[DynamicCell], thresholds: &[f64], w: W) -> Result<(), Error> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["speed", "sigma_e", "n", "episodes", "id_defl_mean", "id_defl_sd", "defl_mean", "defl_sd"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for d in thresholds {
        header.push(format!("frames_gt_{d}_mean"));
        header.push(format!("frames_gt_{d}_sd"));
    }
    wtr.write_record(&header)?;
    for c in cells {
        let mut row = vec![
            num(c.speed),
            num(c.sigma_e),
            c.n.to_string(),
            c.episodes.to_string(),
            num(c.final_id_deflection.mean),
            num(c.final_id_deflection.sd),
            num(c.deflection.mean),
            num(c.deflection.sd),
        ];
        for (_, s) in &c.deflected_frames {
            row.push(num(s.mean));
            row.push(num(s.sd));
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
