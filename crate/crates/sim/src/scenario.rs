//! Experiment scenarios: job grids over seeds, sweep points and schemes.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use risfd_core::agents::{
    baseline_fixed_phase, baseline_hd, run_episode, Agent, DdpgAgent, EpisodeLog, EpisodeSeeds, RandomAgent, Td3Agent,
};
use risfd_core::channel::ChannelSet;
use risfd_core::env::{Env, InitialAction};
use risfd_core::neural::Mlp;
use risfd_core::rng::{stream, Stream};

use crate::config::Settings;
use crate::error::{Result, SimError};
use crate::files::{write_csv, write_json, ActionFile, ChannelFile, NetworkFile, RewardRow, SweepRow};

/// One optimizer and duplex mode combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    DdpgFd,
    DdpgHd,
    Td3Fd,
    Td3Hd,
    FixedPhaseFd,
    FixedPhaseHd,
    Random,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::DdpgFd,
        Scheme::DdpgHd,
        Scheme::Td3Fd,
        Scheme::Td3Hd,
        Scheme::FixedPhaseFd,
        Scheme::FixedPhaseHd,
        Scheme::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::DdpgFd => "ddpg_fd",
            Scheme::DdpgHd => "ddpg_hd",
            Scheme::Td3Fd => "td3_fd",
            Scheme::Td3Hd => "td3_hd",
            Scheme::FixedPhaseFd => "fixed_phase_fd",
            Scheme::FixedPhaseHd => "fixed_phase_hd",
            Scheme::Random => "random",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| SimError::UnknownScheme(name.to_owned()))
    }

    pub fn half_duplex(self) -> bool {
        matches!(self, Scheme::DdpgHd | Scheme::Td3Hd | Scheme::FixedPhaseHd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Convergence,
    SsrVsPmax,
    SsrVsKappa,
    SsrVsM,
    SsrVsAlpha,
    Cdf,
    LrSweep,
    GammaSweep,
    InitRobustness,
}

/// Swept parameter of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    /// Value of the `sweep_param` column.
    pub param: &'static str,
    pub values: Vec<f64>,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::Convergence,
        Scenario::SsrVsPmax,
        Scenario::SsrVsKappa,
        Scenario::SsrVsM,
        Scenario::SsrVsAlpha,
        Scenario::Cdf,
        Scenario::LrSweep,
        Scenario::GammaSweep,
        Scenario::InitRobustness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Convergence => "convergence",
            Scenario::SsrVsPmax => "ssr_vs_pmax",
            Scenario::SsrVsKappa => "ssr_vs_kappa",
            Scenario::SsrVsM => "ssr_vs_M",
            Scenario::SsrVsAlpha => "ssr_vs_alpha",
            Scenario::Cdf => "cdf",
            Scenario::LrSweep => "lr_sweep",
            Scenario::GammaSweep => "gamma_sweep",
            Scenario::InitRobustness => "init_robustness",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| SimError::UnknownScenario(name.to_owned()))
    }

    pub fn default_schemes(self) -> Vec<Scheme> {
        use Scheme::*;
        match self {
            Scenario::SsrVsPmax => vec![DdpgFd, Td3Fd, FixedPhaseFd, DdpgHd, Random],
            Scenario::SsrVsKappa | Scenario::SsrVsAlpha => vec![DdpgFd, DdpgHd],
            Scenario::SsrVsM => vec![DdpgFd, FixedPhaseFd],
            Scenario::Cdf => vec![DdpgFd, Td3Fd, FixedPhaseFd, Random],
            Scenario::Convergence | Scenario::LrSweep | Scenario::GammaSweep | Scenario::InitRobustness => vec![DdpgFd],
        }
    }

    /// Default sweep; `None` for single-point scenarios.
    pub fn sweep(self) -> Option<Sweep> {
        let (param, values): (_, &[f64]) = match self {
            Scenario::SsrVsPmax => ("p_max_dbm", &[10.0, 20.0, 30.0, 40.0]),
            Scenario::SsrVsKappa => ("kappa", &[0.01, 0.05, 0.1]),
            Scenario::SsrVsM => ("M", &[8.0, 16.0, 24.0, 32.0]),
            Scenario::SsrVsAlpha => ("alpha", &[2.0, 2.5, 3.0, 3.5]),
            Scenario::LrSweep => ("lr_actor", &[1e-4, 5e-4, 1e-3]),
            Scenario::GammaSweep => ("gamma", &[0.5, 0.7, 0.9, 0.99]),
            Scenario::InitRobustness => ("init", &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]),
            Scenario::Convergence | Scenario::Cdf => return None,
        };
        Some(Sweep {
            param,
            values: values.to_vec(),
        })
    }

    /// Whether per-step reward files are written.
    pub fn writes_rewards(self) -> bool {
        matches!(
            self,
            Scenario::Convergence | Scenario::Cdf | Scenario::LrSweep | Scenario::GammaSweep | Scenario::InitRobustness
        )
    }

    /// Settings at one sweep point.
    ///
    /// For `init_robustness`, value 0 is the identity start and any other
    /// value a random start drawn from that index.
    pub fn apply_point(self, base: &Settings, value: f64) -> Result<Settings> {
        let mut s = base.clone();
        let v = value.to_string();
        match self {
            Scenario::SsrVsPmax => s.set("power.p_max", &format!("{v}dBm"))?,
            Scenario::SsrVsKappa => s.set("hwi.kappa", &v)?,
            Scenario::SsrVsM => s.set("system.m", &v)?,
            Scenario::SsrVsAlpha => s.set("channel.path_loss_exponent", &v)?,
            Scenario::LrSweep => {
                s.set("agent.lr_actor", &v)?;
                s.set("agent.lr_critic", &(2.0 * value).to_string())?;
            }
            Scenario::GammaSweep => s.set("agent.gamma", &v)?,
            Scenario::InitRobustness => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(SimError::InvalidValue {
                        key: "init".into(),
                        value: v,
                        expected: "a nonnegative integer index".into(),
                    });
                }
                s.initial_action = if value == 0.0 { InitialAction::Identity } else { InitialAction::Random };
            }
            Scenario::Convergence | Scenario::Cdf => {}
        }
        s.validate()?;
        Ok(s)
    }

    /// Random streams of one run.
    pub fn episode_seeds(self, seed: u64, value: f64) -> EpisodeSeeds {
        match self {
            Scenario::InitRobustness => EpisodeSeeds {
                initial_action: value as u64,
                ..EpisodeSeeds::uniform(seed)
            },
            _ => EpisodeSeeds::uniform(seed),
        }
    }
}

/// A resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub settings: Settings,
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
    /// Overrides the scenario's default sweep values.
    pub values: Option<Vec<f64>>,
    pub output: PathBuf,
    /// Worker threads; the rayon default when absent.
    pub threads: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(scenario: Scenario, settings: Settings, output: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            scenario,
            settings,
            seeds: (0..5).collect(),
            schemes: scenario.default_schemes(),
            values: None,
            output: output.into(),
            threads: None,
        }
    }

    pub fn sweep(&self) -> Option<Sweep> {
        self.scenario.sweep().map(|mut s| {
            if let Some(v) = &self.values {
                s.values = v.clone();
            }
            s
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(SimError::NoSeeds);
        }
        if self.schemes.is_empty() {
            return Err(SimError::UnknownScheme(String::new()));
        }
        self.settings.validate()?;
        if let Some(sw) = self.sweep() {
            for &v in &sw.values {
                self.scenario.apply_point(&self.settings, v)?;
            }
        }
        Ok(())
    }

    /// Header text shared by the scenario's files.
    pub fn config_line(&self, settings: &Settings) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let schemes: Vec<&str> = self.schemes.iter().map(|s| s.name()).collect();
        let mut line = format!(
            "scenario={} seeds={} schemes={}",
            self.scenario.name(),
            seeds.join(","),
            schemes.join(",")
        );
        if let Some(sw) = self.sweep() {
            let vals: Vec<String> = sw.values.iter().map(f64::to_string).collect();
            line.push_str(&format!(" sweep={}:{}", sw.param, vals.join(",")));
        }
        line.push(' ');
        line.push_str(&settings.dump());
        line
    }
}

/// One training run.
#[derive(Debug, Clone)]
pub struct Job {
    pub seed: u64,
    /// Sweep value; zero for single-point scenarios.
    pub value: f64,
    pub scheme: Scheme,
    pub settings: Settings,
    pub seeds: EpisodeSeeds,
}

#[derive(Debug, Clone)]
pub struct JobResult {
    pub job: Job,
    pub log: EpisodeLog,
    /// Trained actor of learning schemes.
    pub actor: Option<Mlp>,
    pub channels: ChannelSet,
}

/// Trains `job.scheme` for one episode.
pub fn run_job(job: Job) -> Result<JobResult> {
    let mut env_cfg = job.settings.env_config();
    if job.scheme.half_duplex() {
        env_cfg = baseline_hd(&env_cfg);
    }
    if matches!(job.scheme, Scheme::FixedPhaseFd | Scheme::FixedPhaseHd) {
        env_cfg = baseline_fixed_phase(&env_cfg);
    }
    let cfg = job.settings.agent_config();
    let mut env = Env::new(env_cfg)?;
    let (sd, ad) = (env.state_dim(), env.action_dim());
    let mut init = stream(job.seeds.agent, Stream::NetworkInit);
    let (log, actor) = match job.scheme {
        Scheme::Td3Fd | Scheme::Td3Hd => {
            let mut a = Td3Agent::new(cfg.clone(), sd, ad, &mut init)?;
            let log = run_episode(&mut a, &mut env, &cfg, job.seeds)?;
            (log, Some(a.actor().clone()))
        }
        Scheme::Random => {
            let mut a = RandomAgent::new(ad);
            (run_episode(&mut a as &mut dyn Agent, &mut env, &cfg, job.seeds)?, None)
        }
        _ => {
            let mut a = DdpgAgent::new(cfg.clone(), sd, ad, &mut init)?;
            let log = run_episode(&mut a, &mut env, &cfg, job.seeds)?;
            (log, Some(a.actor().clone()))
        }
    };
    let channels = env.channels()?.clone();
    Ok(JobResult {
        job,
        log,
        actor,
        channels,
    })
}

/// Runs jobs in parallel; results keep the input order.
pub fn run_jobs(jobs: Vec<Job>, threads: Option<usize>) -> Result<Vec<JobResult>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| SimError::InvalidValue {
        key: "threads".into(),
        value: format!("{threads:?}"),
        expected: e.to_string(),
    })?;
    pool.install(|| jobs.into_par_iter().map(run_job).collect())
}

/// Trains `scheme` under `settings` for every seed.
pub fn run_point(settings: &Settings, scheme: Scheme, seeds: &[u64], threads: Option<usize>) -> Result<Vec<JobResult>> {
    settings.validate()?;
    let jobs = seeds
        .iter()
        .map(|&seed| Job {
            seed,
            value: 0.0,
            scheme,
            settings: settings.clone(),
            seeds: EpisodeSeeds::uniform(seed),
        })
        .collect();
    run_jobs(jobs, threads)
}

/// Every (seed, sweep value, scheme) job of `spec`, in output order.
pub fn plan(spec: &ExperimentSpec) -> Result<Vec<Job>> {
    let values = spec.sweep().map_or(vec![0.0], |s| s.values);
    let mut jobs = Vec::new();
    for &value in &values {
        let settings = spec.scenario.apply_point(&spec.settings, value)?;
        for &scheme in &spec.schemes {
            for &seed in &spec.seeds {
                jobs.push(Job {
                    seed,
                    value,
                    scheme,
                    settings: settings.clone(),
                    seeds: spec.scenario.episode_seeds(seed, value),
                });
            }
        }
    }
    Ok(jobs)
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub files: Vec<PathBuf>,
    pub results: Vec<JobResult>,
}

fn reward_rows(results: &[&JobResult]) -> Vec<RewardRow> {
    results
        .iter()
        .flat_map(|r| {
            r.log
                .instant
                .iter()
                .zip(&r.log.average)
                .enumerate()
                .map(move |(step, (&i, &a))| RewardRow {
                    seed: r.job.seed,
                    step,
                    instant_reward: i,
                    average_reward: a,
                })
        })
        .collect()
}

fn value_tag(v: f64) -> String {
    v.to_string()
}

/// Runs every job of `spec` and writes its files under `spec.output`.
pub fn run_scenario(spec: &ExperimentSpec) -> Result<ScenarioOutput> {
    spec.validate()?;
    let results = run_jobs(plan(spec)?, spec.threads)?;
    let name = spec.scenario.name();
    let sweep = spec.sweep();
    let param = sweep.as_ref().map_or("none", |s| s.param);
    let mut files = Vec::new();

    let rows: Vec<SweepRow> = results
        .iter()
        .map(|r| SweepRow {
            seed: r.job.seed,
            sweep_param: param.to_owned(),
            sweep_value: r.job.value,
            scheme: r.job.scheme.name().to_owned(),
            best_ssr: r.log.best_reward,
        })
        .collect();
    let path = spec.output.join(format!("{name}_sweep.csv"));
    write_csv(&path, &spec.config_line(&spec.settings), &rows)?;
    files.push(path);

    if spec.scenario.writes_rewards() {
        let values = sweep.as_ref().map_or(vec![0.0], |s| s.values.clone());
        for &value in &values {
            let settings = spec.scenario.apply_point(&spec.settings, value)?;
            for &scheme in &spec.schemes {
                let group: Vec<&JobResult> = results
                    .iter()
                    .filter(|r| r.job.scheme == scheme && r.job.value == value)
                    .collect();
                let file = match &sweep {
                    Some(s) => format!("{name}_{}_{}{}_rewards.csv", scheme.name(), s.param, value_tag(value)),
                    None => format!("{name}_{}_rewards.csv", scheme.name()),
                };
                let path = spec.output.join(file);
                write_csv(&path, &spec.config_line(&settings), &reward_rows(&group))?;
                files.push(path);
            }
        }
    }

    if spec.scenario == Scenario::Convergence {
        for r in &results {
            files.extend(write_run_artifacts(&spec.output, name, r)?);
        }
    }
    Ok(ScenarioOutput { files, results })
}

/// Actor checkpoint, channel realization and best action of one run.
pub fn write_run_artifacts(dir: &Path, prefix: &str, r: &JobResult) -> Result<Vec<PathBuf>> {
    let stem = format!("{prefix}_{}_seed{}", r.job.scheme.name(), r.job.seed);
    let mut out = Vec::new();
    if let Some(actor) = &r.actor {
        let p = dir.join(format!("{stem}_actor.json"));
        write_json(&p, &NetworkFile::from_mlp(actor))?;
        out.push(p);
    }
    let p = dir.join(format!("{stem}_channels.json"));
    write_json(&p, &ChannelFile::from(&r.channels))?;
    out.push(p);
    let p = dir.join(format!("{stem}_best_action.json"));
    write_json(&p, &ActionFile::new(&r.log.best_action, r.log.best_reward, r.log.best_step))?;
    out.push(p);
    Ok(out)
}
