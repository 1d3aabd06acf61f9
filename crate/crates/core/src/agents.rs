//! DDPG and TD3 agents, the episode loop and the comparison baselines.
//!
//! Actors map a whitened state to `[-1, 1]^D_a` through a tanh output.
//! Critics take the state and action concatenated and return a scalar.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::env::{ActionMode, Env, EnvConfig, Whitener};
use crate::error::{invalid, Error, Result};
use crate::neural::{adam_step, soft_update, Activation, AdamState, Architecture, Mlp};
use crate::rng::{self, Rng, Stream};
use crate::system::Action;

/// `sigma_t = max(floor, sigma0 * decay^t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSchedule {
    pub sigma0: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        NoiseSchedule {
            sigma0: 0.1,
            decay: 0.9995,
            floor: 0.001,
        }
    }
}

impl NoiseSchedule {
    pub fn sigma(&self, t: u64) -> f64 {
        (self.sigma0 * self.decay.powf(t as f64)).max(self.floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Td3Params {
    /// Critic updates per actor update.
    pub policy_delay: u64,
    pub smoothing_sigma: f64,
    pub smoothing_clip: f64,
}

impl Default for Td3Params {
    fn default() -> Self {
        Td3Params {
            policy_delay: 2,
            smoothing_sigma: 0.2,
            smoothing_clip: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub tau_actor: f64,
    pub tau_critic: f64,
    /// Minibatch size.
    pub batch: usize,
    /// Replay capacity.
    pub capacity: usize,
    /// Steps per episode.
    pub steps: usize,
    /// Width of every hidden layer.
    pub hidden: usize,
    pub noise: NoiseSchedule,
    pub td3: Td3Params,
    /// Empty the replay memory at the start of every episode.
    pub clear_replay: bool,
    /// Smoothing factor of the logged average reward.
    pub smoothing: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            gamma: 0.9,
            lr_actor: 5e-4,
            lr_critic: 1e-3,
            tau_actor: 0.005,
            tau_critic: 0.005,
            batch: 128,
            capacity: 100_000,
            steps: 20_000,
            hidden: 128,
            noise: NoiseSchedule::default(),
            td3: Td3Params::default(),
            clear_replay: true,
            smoothing: 0.995,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |what: &'static str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(what, v))
            }
        };
        unit("discount factor", self.gamma)?;
        unit("actor soft-update rate", self.tau_actor)?;
        unit("critic soft-update rate", self.tau_critic)?;
        unit("reward smoothing factor", self.smoothing)?;
        unit("noise decay", self.noise.decay)?;
        for (what, v) in [("actor learning rate", self.lr_actor), ("critic learning rate", self.lr_critic)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(what, v));
            }
        }
        if self.noise.sigma0 < 0.0 || self.noise.floor < 0.0 {
            return Err(invalid("exploration noise", "negative standard deviation"));
        }
        if self.batch == 0 || self.batch > self.capacity {
            return Err(invalid("batch size", "need 1 <= batch <= capacity"));
        }
        if self.steps == 0 || self.hidden == 0 {
            return Err(invalid("agent config", "steps and hidden width must be positive"));
        }
        if self.td3.policy_delay == 0 || self.td3.smoothing_sigma < 0.0 || self.td3.smoothing_clip < 0.0 {
            return Err(invalid("td3 parameters", "delay >= 1, nonnegative noise"));
        }
        Ok(())
    }

    /// `D_s -> h -> h -> h -> D_a`, ReLU hidden, tanh output.
    pub fn actor_architecture(&self, state_dim: usize, action_dim: usize) -> Architecture {
        let h = self.hidden;
        Architecture::mlp(state_dim, &[h, h, h], action_dim, Activation::Relu, Activation::Tanh)
    }

    /// `D_s + D_a -> h -> h -> 1`, ReLU hidden, linear output.
    pub fn critic_architecture(&self, state_dim: usize, action_dim: usize) -> Architecture {
        let h = self.hidden;
        Architecture::mlp(state_dim + action_dim, &[h, h], 1, Activation::Relu, Activation::Linear)
    }
}

/// Fixed-capacity ring of transitions in flat storage.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    state_dim: usize,
    action_dim: usize,
    capacity: usize,
    len: usize,
    cursor: usize,
    states: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_states: Vec<f64>,
}

/// Row-major minibatch gathered from a [`ReplayBuffer`].
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub size: usize,
    pub states: Vec<f64>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<f64>,
}

impl ReplayBuffer {
    pub fn new(state_dim: usize, action_dim: usize, capacity: usize) -> Self {
        ReplayBuffer {
            state_dim,
            action_dim,
            capacity,
            len: 0,
            cursor: 0,
            states: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_states: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn clear(&mut self) {
        self.len = 0;
        self.cursor = 0;
        self.states.clear();
        self.actions.clear();
        self.rewards.clear();
        self.next_states.clear();
    }

    /// Stores a transition, overwriting the oldest one when full.
    pub fn push(&mut self, state: &[f64], action: &[f64], reward: f64, next_state: &[f64]) -> Result<()> {
        if state.len() != self.state_dim || next_state.len() != self.state_dim || action.len() != self.action_dim {
            return Err(Error::LengthMismatch {
                what: "transition",
                expected: self.state_dim,
                found: state.len(),
            });
        }
        if self.capacity == 0 {
            return Ok(());
        }
        if self.len < self.capacity {
            self.states.extend_from_slice(state);
            self.actions.extend_from_slice(action);
            self.rewards.push(reward);
            self.next_states.extend_from_slice(next_state);
            self.len += 1;
        } else {
            let (s, a) = (self.state_dim, self.action_dim);
            let i = self.cursor;
            self.states[i * s..(i + 1) * s].copy_from_slice(state);
            self.actions[i * a..(i + 1) * a].copy_from_slice(action);
            self.rewards[i] = reward;
            self.next_states[i * s..(i + 1) * s].copy_from_slice(next_state);
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// Uniform indices with replacement.
    pub fn sample_indices(&self, rng: &mut Rng, n: usize) -> Vec<usize> {
        if self.len == 0 {
            return Vec::new();
        }
        (0..n).map(|_| rng.random_range(0..self.len)).collect()
    }

    pub fn gather(&self, indices: &[usize]) -> Batch {
        let (s, a) = (self.state_dim, self.action_dim);
        let mut b = Batch {
            size: indices.len(),
            states: Vec::with_capacity(indices.len() * s),
            actions: Vec::with_capacity(indices.len() * a),
            rewards: Vec::with_capacity(indices.len()),
            next_states: Vec::with_capacity(indices.len() * s),
        };
        for &i in indices {
            b.states.extend_from_slice(&self.states[i * s..(i + 1) * s]);
            b.actions.extend_from_slice(&self.actions[i * a..(i + 1) * a]);
            b.rewards.push(self.rewards[i]);
            b.next_states.extend_from_slice(&self.next_states[i * s..(i + 1) * s]);
        }
        b
    }

    pub fn sample(&self, rng: &mut Rng, n: usize) -> Batch {
        self.gather(&self.sample_indices(rng, n))
    }
}

/// Losses from one training step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    /// Mean squared Bellman error before the update.
    pub critic_loss: f64,
    /// Mean critic value of the actor's actions, when the actor was updated.
    pub actor_objective: Option<f64>,
}

pub trait Agent {
    /// Policy output, plus clipped Gaussian exploration when `explore`.
    fn act(&mut self, state: &[f64], explore: bool, rng: &mut Rng) -> Result<Vec<f64>>;
    /// One minibatch update; `None` while the buffer holds fewer than a batch.
    fn train_step(&mut self, buffer: &ReplayBuffer, rng: &mut Rng) -> Result<Option<TrainStats>>;
    /// Advances the exploration schedule by one step.
    fn decay_noise(&mut self);
    fn sigma(&self) -> f64;
    /// Whether transitions should be collected for this agent.
    fn learns(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone)]
struct Trained {
    net: Mlp,
    target: Mlp,
    opt: AdamState,
}

impl Trained {
    fn new(net: Mlp) -> Self {
        let opt = AdamState::new(net.param_count());
        Trained {
            target: net.clone(),
            net,
            opt,
        }
    }
}

fn concat_rows(left: &[f64], lw: usize, right: &[f64], rw: usize, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * (lw + rw));
    for i in 0..n {
        out.extend_from_slice(&left[i * lw..(i + 1) * lw]);
        out.extend_from_slice(&right[i * rw..(i + 1) * rw]);
    }
    out
}

fn add_exploration(action: &mut [f64], sigma: f64, rng: &mut Rng) {
    for v in action.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v = (*v + sigma * z).clamp(-1.0, 1.0);
    }
}

/// I.i.d. `N(0, sigma^2)` samples clipped to `[-clip, clip]`.
pub fn smoothing_noise(rng: &mut Rng, n: usize, sigma: f64, clip: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            (sigma * z).clamp(-clip, clip)
        })
        .collect()
}

/// One Adam step on the mean squared error against `targets`.
fn critic_step(c: &mut Trained, inputs: &[f64], targets: &[f64], lr: f64) -> Result<f64> {
    let n = targets.len();
    let cache = c.net.forward_batch(inputs, n)?;
    let q = cache.output();
    let mut loss = 0.0;
    let upstream: Vec<f64> = q
        .iter()
        .zip(targets)
        .map(|(q, y)| {
            let e = q - y;
            loss += e * e;
            2.0 * e / n as f64
        })
        .collect();
    let mut grads = vec![0.0; c.net.param_count()];
    c.net.backward_into(&cache, &upstream, Some(&mut grads), false)?;
    adam_step(c.net.params_mut(), &grads, &mut c.opt, lr)?;
    Ok(loss / n as f64)
}

/// One Adam step raising the mean of `critic(s, actor(s))`.
fn actor_step(actor: &mut Trained, critic: &Mlp, states: &[f64], n: usize, lr: f64) -> Result<f64> {
    let sd = actor.net.input_dim();
    let ad = actor.net.output_dim();
    let a_cache = actor.net.forward_batch(states, n)?;
    let inputs = concat_rows(states, sd, a_cache.output(), ad, n);
    let q_cache = critic.forward_batch(&inputs, n)?;
    let objective = q_cache.output().iter().sum::<f64>() / n as f64;
    let upstream = vec![-1.0 / n as f64; n];
    let input_grad = critic
        .backward_into(&q_cache, &upstream, None, true)?
        .expect("input gradient requested");
    let mut action_grad = Vec::with_capacity(n * ad);
    for row in input_grad.chunks_exact(sd + ad) {
        action_grad.extend_from_slice(&row[sd..]);
    }
    let mut grads = vec![0.0; actor.net.param_count()];
    actor.net.backward_into(&a_cache, &action_grad, Some(&mut grads), false)?;
    adam_step(actor.net.params_mut(), &grads, &mut actor.opt, lr)?;
    Ok(objective)
}

fn check_dims(state: &[f64], expected: usize) -> Result<()> {
    if state.len() != expected {
        return Err(Error::LengthMismatch {
            what: "state",
            expected,
            found: state.len(),
        });
    }
    Ok(())
}

/// Deterministic policy gradient with one critic.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    cfg: AgentConfig,
    state_dim: usize,
    action_dim: usize,
    actor: Trained,
    critic: Trained,
    noise_step: u64,
    updates: u64,
}

impl DdpgAgent {
    /// Online nets drawn from `rng`; targets start as copies.
    pub fn new(cfg: AgentConfig, state_dim: usize, action_dim: usize, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        let actor = Mlp::init_uniform(rng, cfg.actor_architecture(state_dim, action_dim));
        let critic = Mlp::init_uniform(rng, cfg.critic_architecture(state_dim, action_dim));
        Ok(DdpgAgent {
            cfg,
            state_dim,
            action_dim,
            actor: Trained::new(actor),
            critic: Trained::new(critic),
            noise_step: 0,
            updates: 0,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor.net
    }

    pub fn critic(&self) -> &Mlp {
        &self.critic.net
    }

    pub fn target_actor(&self) -> &Mlp {
        &self.actor.target
    }

    pub fn target_critic(&self) -> &Mlp {
        &self.critic.target
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// `r + gamma Q_t(s', actor_t(s'))` for every row of `batch`.
    pub fn targets(&self, batch: &Batch) -> Result<Vec<f64>> {
        let n = batch.size;
        let next = self.actor.target.forward_batch(&batch.next_states, n)?;
        let inputs = concat_rows(&batch.next_states, self.state_dim, next.output(), self.action_dim, n);
        let q = self.critic.target.forward_batch(&inputs, n)?;
        Ok(batch
            .rewards
            .iter()
            .zip(q.output())
            .map(|(r, q)| r + self.cfg.gamma * q)
            .collect())
    }

    /// Update on an explicit minibatch.
    pub fn train_on(&mut self, batch: &Batch) -> Result<TrainStats> {
        let n = batch.size;
        let y = self.targets(batch)?;
        let inputs = concat_rows(&batch.states, self.state_dim, &batch.actions, self.action_dim, n);
        let critic_loss = critic_step(&mut self.critic, &inputs, &y, self.cfg.lr_critic)?;
        let objective = actor_step(&mut self.actor, &self.critic.net, &batch.states, n, self.cfg.lr_actor)?;
        soft_update(&mut self.critic.target, &self.critic.net, self.cfg.tau_critic)?;
        soft_update(&mut self.actor.target, &self.actor.net, self.cfg.tau_actor)?;
        self.updates += 1;
        Ok(TrainStats {
            critic_loss,
            actor_objective: Some(objective),
        })
    }
}

impl Agent for DdpgAgent {
    fn act(&mut self, state: &[f64], explore: bool, rng: &mut Rng) -> Result<Vec<f64>> {
        check_dims(state, self.state_dim)?;
        let mut a = self.actor.net.forward(state)?;
        if explore {
            add_exploration(&mut a, self.sigma(), rng);
        }
        Ok(a)
    }

    fn train_step(&mut self, buffer: &ReplayBuffer, rng: &mut Rng) -> Result<Option<TrainStats>> {
        if buffer.len() < self.cfg.batch {
            return Ok(None);
        }
        let batch = buffer.sample(rng, self.cfg.batch);
        self.train_on(&batch).map(Some)
    }

    fn decay_noise(&mut self) {
        self.noise_step += 1;
    }

    fn sigma(&self) -> f64 {
        self.cfg.noise.sigma(self.noise_step)
    }
}

/// Twin critics, target smoothing and delayed actor updates.
#[derive(Debug, Clone)]
pub struct Td3Agent {
    cfg: AgentConfig,
    state_dim: usize,
    action_dim: usize,
    actor: Trained,
    critics: [Trained; 2],
    noise_step: u64,
    critic_updates: u64,
    actor_updates: u64,
}

/// Per-row twin target values.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinTargets {
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    /// `r + gamma min(q1, q2)`.
    pub y: Vec<f64>,
}

impl Td3Agent {
    pub fn new(cfg: AgentConfig, state_dim: usize, action_dim: usize, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        let actor = Mlp::init_uniform(rng, cfg.actor_architecture(state_dim, action_dim));
        let c1 = Mlp::init_uniform(rng, cfg.critic_architecture(state_dim, action_dim));
        let c2 = Mlp::init_uniform(rng, cfg.critic_architecture(state_dim, action_dim));
        Ok(Td3Agent {
            cfg,
            state_dim,
            action_dim,
            actor: Trained::new(actor),
            critics: [Trained::new(c1), Trained::new(c2)],
            noise_step: 0,
            critic_updates: 0,
            actor_updates: 0,
        })
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor.net
    }

    pub fn critic_updates(&self) -> u64 {
        self.critic_updates
    }

    pub fn actor_updates(&self) -> u64 {
        self.actor_updates
    }

    /// Targets under smoothed target-policy actions.
    pub fn targets(&self, batch: &Batch, rng: &mut Rng) -> Result<TwinTargets> {
        let n = batch.size;
        let mut next = self.actor.target.forward_batch(&batch.next_states, n)?.output().to_vec();
        let td3 = &self.cfg.td3;
        let eps = smoothing_noise(rng, next.len(), td3.smoothing_sigma, td3.smoothing_clip);
        next.iter_mut().zip(eps).for_each(|(a, e)| *a = (*a + e).clamp(-1.0, 1.0));
        let inputs = concat_rows(&batch.next_states, self.state_dim, &next, self.action_dim, n);
        let q1 = self.critics[0].target.forward_batch(&inputs, n)?.output().to_vec();
        let q2 = self.critics[1].target.forward_batch(&inputs, n)?.output().to_vec();
        let y = (0..n)
            .map(|i| batch.rewards[i] + self.cfg.gamma * q1[i].min(q2[i]))
            .collect();
        Ok(TwinTargets { q1, q2, y })
    }

    pub fn train_on(&mut self, batch: &Batch, rng: &mut Rng) -> Result<TrainStats> {
        let n = batch.size;
        let t = self.targets(batch, rng)?;
        let inputs = concat_rows(&batch.states, self.state_dim, &batch.actions, self.action_dim, n);
        let mut critic_loss = 0.0;
        for c in self.critics.iter_mut() {
            critic_loss += critic_step(c, &inputs, &t.y, self.cfg.lr_critic)?;
        }
        self.critic_updates += 1;
        let mut actor_objective = None;
        if self.critic_updates % self.cfg.td3.policy_delay == 0 {
            let obj = actor_step(&mut self.actor, &self.critics[0].net, &batch.states, n, self.cfg.lr_actor)?;
            actor_objective = Some(obj);
            self.actor_updates += 1;
            for c in self.critics.iter_mut() {
                soft_update(&mut c.target, &c.net, self.cfg.tau_critic)?;
            }
            soft_update(&mut self.actor.target, &self.actor.net, self.cfg.tau_actor)?;
        }
        Ok(TrainStats {
            critic_loss: critic_loss / 2.0,
            actor_objective,
        })
    }
}

impl Agent for Td3Agent {
    fn act(&mut self, state: &[f64], explore: bool, rng: &mut Rng) -> Result<Vec<f64>> {
        check_dims(state, self.state_dim)?;
        let mut a = self.actor.net.forward(state)?;
        if explore {
            add_exploration(&mut a, self.sigma(), rng);
        }
        Ok(a)
    }

    fn train_step(&mut self, buffer: &ReplayBuffer, rng: &mut Rng) -> Result<Option<TrainStats>> {
        if buffer.len() < self.cfg.batch {
            return Ok(None);
        }
        let batch = buffer.sample(rng, self.cfg.batch);
        self.train_on(&batch, rng).map(Some)
    }

    fn decay_noise(&mut self) {
        self.noise_step += 1;
    }

    fn sigma(&self) -> f64 {
        self.cfg.noise.sigma(self.noise_step)
    }
}

/// Uniform random actions, no learning.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    action_dim: usize,
}

impl RandomAgent {
    pub fn new(action_dim: usize) -> Self {
        RandomAgent { action_dim }
    }
}

impl Agent for RandomAgent {
    fn act(&mut self, _state: &[f64], _explore: bool, rng: &mut Rng) -> Result<Vec<f64>> {
        Ok((0..self.action_dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
    }

    fn train_step(&mut self, _buffer: &ReplayBuffer, _rng: &mut Rng) -> Result<Option<TrainStats>> {
        Ok(None)
    }

    fn decay_noise(&mut self) {}

    fn sigma(&self) -> f64 {
        0.0
    }

    fn learns(&self) -> bool {
        false
    }
}

/// `avg_0 = r_0`, `avg_{t+1} = w avg_t + (1 - w) r_{t+1}`.
pub fn average_reward(instant: &[f64], smoothing: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(instant.len());
    let mut avg = match instant.first() {
        Some(&r) => r,
        None => return out,
    };
    out.push(avg);
    for &r in &instant[1..] {
        avg = smoothing * avg + (1.0 - smoothing) * r;
        out.push(avg);
    }
    out
}

/// Seeds of the independent random streams of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeSeeds {
    /// Geometry and channel realization.
    pub channel: u64,
    /// Random first action.
    pub initial_action: u64,
    /// Phase noise, exploration and minibatch sampling.
    pub agent: u64,
}

impl EpisodeSeeds {
    pub fn uniform(seed: u64) -> Self {
        EpisodeSeeds {
            channel: seed,
            initial_action: seed,
            agent: seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub instant: Vec<f64>,
    pub average: Vec<f64>,
    pub best_reward: f64,
    pub best_action: Action,
    /// Zero-based step of the best reward.
    pub best_step: usize,
}

/// Runs one episode with a fresh replay memory.
pub fn run_episode<A: Agent + ?Sized>(
    agent: &mut A,
    env: &mut Env,
    cfg: &AgentConfig,
    seeds: EpisodeSeeds,
) -> Result<EpisodeLog> {
    let mut buffer = ReplayBuffer::new(env.state_dim(), env.action_dim(), cfg.capacity);
    run_episode_with(agent, env, cfg, seeds, &mut buffer)
}

/// Runs one episode on a caller-owned replay memory, cleared first when
/// `cfg.clear_replay` is set.
pub fn run_episode_with<A: Agent + ?Sized>(
    agent: &mut A,
    env: &mut Env,
    cfg: &AgentConfig,
    seeds: EpisodeSeeds,
    buffer: &mut ReplayBuffer,
) -> Result<EpisodeLog> {
    cfg.validate()?;
    if cfg.clear_replay {
        buffer.clear();
    }
    let channels = env.sample_channels(&mut rng::stream(seeds.channel, Stream::Channel))?;
    let first = env.initial_action(&mut rng::stream(seeds.initial_action, Stream::InitialAction));
    let mut phase_rng = rng::stream(seeds.agent, Stream::PhaseNoise);
    let mut explore_rng = rng::stream(seeds.agent, Stream::Exploration);
    let mut replay_rng = rng::stream(seeds.agent, Stream::Replay);

    let mut whitener = Whitener::new(env.state_dim());
    let raw = env.reset_with(channels, first)?;
    let mut state = whitener.whiten(&raw)?;
    let mut instant = Vec::with_capacity(cfg.steps);
    let mut best: Option<(f64, Action, usize)> = None;
    for t in 0..cfg.steps {
        let action = agent.act(&state, true, &mut explore_rng)?;
        let out = env.step(&action, &mut phase_rng)?;
        let next = whitener.whiten(&out.state)?;
        if agent.learns() {
            buffer.push(&state, &action, out.reward, &next)?;
            agent.train_step(buffer, &mut replay_rng)?;
        }
        if best.as_ref().is_none_or(|b| out.reward > b.0) {
            best = Some((out.reward, out.action, t));
        }
        instant.push(out.reward);
        state = next;
        agent.decay_noise();
    }
    let (best_reward, best_action, best_step) = best.expect("at least one step");
    Ok(EpisodeLog {
        average: average_reward(&instant, cfg.smoothing),
        instant,
        best_reward,
        best_action,
        best_step,
    })
}

/// Precoder-only variant: RIS phases stay at zero.
pub fn baseline_fixed_phase(config: &EnvConfig) -> EnvConfig {
    EnvConfig {
        action_mode: ActionMode::BeamformingOnly,
        ..config.clone()
    }
}

/// Half-duplex variant: users do not transmit.
pub fn baseline_hd(config: &EnvConfig) -> EnvConfig {
    config.half_duplex()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Sizes;
    use crate::system::HwiConfig;

    fn small_cfg() -> AgentConfig {
        AgentConfig {
            batch: 16,
            capacity: 1000,
            steps: 50,
            hidden: 16,
            ..AgentConfig::default()
        }
    }

    #[test]
    fn noise_schedule_arithmetic() {
        let n = NoiseSchedule::default();
        assert_eq!(n.sigma(0), 0.1);
        assert!((n.sigma(1) - 0.1 * 0.9995).abs() < 1e-15);
        // 0.9995^t < 0.01 once t > ln(0.01)/ln(0.9995) ~ 9208
        assert_eq!(n.sigma(10_000), 0.001);
        let mut prev = f64::INFINITY;
        for t in (0..20_000).step_by(97) {
            let s = n.sigma(t);
            assert!(s <= prev && s == (0.1 * 0.9995f64.powf(t as f64)).max(0.001));
            prev = s;
        }
    }

    #[test]
    fn config_validation() {
        assert!(AgentConfig::default().validate().is_ok());
        assert!(AgentConfig { gamma: 1.5, ..AgentConfig::default() }.validate().is_err());
        assert!(AgentConfig { batch: 10, capacity: 5, ..AgentConfig::default() }.validate().is_err());
        assert!(AgentConfig { steps: 0, ..AgentConfig::default() }.validate().is_err());
        let c = AgentConfig::default();
        assert_eq!(c.actor_architecture(92, 32).sizes, vec![92, 128, 128, 128, 32]);
        assert_eq!(c.critic_architecture(92, 32).sizes, vec![124, 128, 128, 1]);
    }

    #[test]
    fn replay_ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(1, 1, 3);
        for i in 0..5 {
            b.push(&[i as f64], &[0.0], i as f64, &[0.0]).unwrap();
            assert!(b.len() <= 3);
        }
        let all = b.gather(&[0, 1, 2]);
        let mut r = all.rewards.clone();
        r.sort_by(f64::total_cmp);
        assert_eq!(r, vec![2.0, 3.0, 4.0]);
        assert!(b.push(&[0.0, 0.0], &[0.0], 0.0, &[0.0]).is_err());
        b.clear();
        assert!(b.is_empty());
    }

    #[test]
    fn replay_sampling_is_uniform() {
        let mut b = ReplayBuffer::new(1, 1, 100);
        for i in 0..100 {
            b.push(&[i as f64], &[0.0], 0.0, &[0.0]).unwrap();
        }
        let mut r = rng::stream(1, Stream::Replay);
        let mut counts = [0u64; 100];
        for i in b.sample_indices(&mut r, 100_000) {
            counts[i] += 1;
        }
        let e = 1000.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // chi-square, 99 degrees of freedom, upper 0.001 quantile
        assert!(chi2 < 148.23, "chi2 = {chi2}");
    }

    #[test]
    fn act_is_deterministic_and_clipped() {
        let mut r = rng::stream(2, Stream::NetworkInit);
        let mut a = DdpgAgent::new(small_cfg(), 6, 4, &mut r).unwrap();
        let s = [0.5, -1.0, 2.0, 0.0, 3.0, -4.0];
        let mut e = rng::stream(2, Stream::Exploration);
        assert_eq!(a.act(&s, false, &mut e).unwrap(), a.act(&s, false, &mut e).unwrap());
        for _ in 0..200 {
            let x = a.act(&s, true, &mut e).unwrap();
            assert!(x.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
        assert!(a.act(&s[..5], false, &mut e).is_err());
    }

    fn one_transition_buffer(sd: usize, ad: usize, reward: f64) -> ReplayBuffer {
        let mut b = ReplayBuffer::new(sd, ad, 64);
        let s: Vec<f64> = (0..sd).map(|i| (i as f64 * 0.3).sin()).collect();
        let a: Vec<f64> = (0..ad).map(|i| (i as f64 * 0.7).cos() * 0.5).collect();
        for _ in 0..64 {
            b.push(&s, &a, reward, &s).unwrap();
        }
        b
    }

    #[test]
    fn zero_discount_targets_equal_rewards() {
        let cfg = AgentConfig { gamma: 0.0, ..small_cfg() };
        let a = DdpgAgent::new(cfg, 5, 3, &mut rng::stream(3, Stream::NetworkInit)).unwrap();
        let b = one_transition_buffer(5, 3, 0.75);
        let batch = b.sample(&mut rng::stream(3, Stream::Replay), 16);
        assert!(a.targets(&batch).unwrap().iter().all(|&y| y == 0.75));
    }

    #[test]
    fn critic_regresses_to_constant() {
        let cfg = AgentConfig { gamma: 0.0, ..small_cfg() };
        let mut a = DdpgAgent::new(cfg, 5, 3, &mut rng::stream(4, Stream::NetworkInit)).unwrap();
        let b = one_transition_buffer(5, 3, 1.0);
        let mut r = rng::stream(4, Stream::Replay);
        let first = a.train_step(&b, &mut r).unwrap().unwrap().critic_loss;
        let mut last = first;
        for _ in 1..200 {
            last = a.train_step(&b, &mut r).unwrap().unwrap().critic_loss;
        }
        assert!(last < 1e-3 && last < first, "{first} -> {last}");
        assert!(a.actor().params().iter().chain(a.critic().params()).all(|p| p.is_finite()));
    }

    #[test]
    fn unit_soft_rate_copies_online_nets() {
        let cfg = AgentConfig {
            tau_actor: 1.0,
            tau_critic: 1.0,
            ..small_cfg()
        };
        let mut a = DdpgAgent::new(cfg, 5, 3, &mut rng::stream(5, Stream::NetworkInit)).unwrap();
        let b = one_transition_buffer(5, 3, 0.3);
        a.train_step(&b, &mut rng::stream(5, Stream::Replay)).unwrap().unwrap();
        assert_eq!(a.target_actor(), a.actor());
        assert_eq!(a.target_critic(), a.critic());
    }

    #[test]
    fn underfilled_buffer_skips_training() {
        let mut a = DdpgAgent::new(small_cfg(), 5, 3, &mut rng::stream(6, Stream::NetworkInit)).unwrap();
        let b = ReplayBuffer::new(5, 3, 100);
        assert_eq!(a.train_step(&b, &mut rng::stream(6, Stream::Replay)).unwrap(), None);
        assert_eq!(a.updates(), 0);
    }

    #[test]
    fn td3_targets_and_delay() {
        let mut a = Td3Agent::new(small_cfg(), 5, 3, &mut rng::stream(7, Stream::NetworkInit)).unwrap();
        let b = one_transition_buffer(5, 3, 0.5);
        let mut r = rng::stream(7, Stream::Replay);
        let batch = b.sample(&mut r, 16);
        let t = a.targets(&batch, &mut r).unwrap();
        for i in 0..16 {
            let m = (t.y[i] - 0.5) / 0.9;
            assert!(m <= t.q1[i] + 1e-12 && m <= t.q2[i] + 1e-12);
        }
        for step in 1..=9u64 {
            let s = a.train_step(&b, &mut r).unwrap().unwrap();
            assert_eq!(a.actor_updates(), a.critic_updates() / 2);
            assert_eq!(s.actor_objective.is_some(), step % 2 == 0);
        }
        let eps = smoothing_noise(&mut r, 10_000, 0.2, 0.5);
        assert!(eps.iter().all(|e| e.abs() <= 0.5));
        assert!(eps.iter().any(|e| e.abs() == 0.5));
    }

    #[test]
    fn average_reward_examples() {
        let x = [1.0, 4.0, 2.0, 8.0];
        assert_eq!(average_reward(&x, 0.0), x.to_vec());
        assert_eq!(average_reward(&x, 1.0), vec![1.0; 4]);
        assert_eq!(average_reward(&[3.0; 5], 0.7), vec![3.0; 5]);
        assert!(average_reward(&[], 0.5).is_empty());
    }

    fn tiny_env() -> EnvConfig {
        let sizes = Sizes { m: 4, nt: 2, nr: 2, k: 1, l: 1 };
        EnvConfig {
            sizes,
            user_powers: vec![0.1],
            hwi: HwiConfig::uniform(1, 0.01, 1.0),
            ..EnvConfig::default()
        }
    }

    #[test]
    fn episode_log_contract() {
        let cfg = small_cfg();
        let run = || {
            let mut env = Env::new(tiny_env()).unwrap();
            let mut a = DdpgAgent::new(cfg.clone(), env.state_dim(), env.action_dim(), &mut rng::stream(8, Stream::NetworkInit)).unwrap();
            run_episode(&mut a, &mut env, &cfg, EpisodeSeeds::uniform(8)).unwrap()
        };
        let log = run();
        assert_eq!(log.instant.len(), cfg.steps);
        assert_eq!(log.average.len(), cfg.steps);
        let max = log.instant.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(log.best_reward, max);
        assert_eq!(log.instant[log.best_step], max);
        assert_eq!(log, run());
    }

    #[test]
    fn fixed_phase_baseline_never_moves_theta() {
        let env_cfg = baseline_fixed_phase(&EnvConfig::default());
        assert_eq!(env_cfg.action_dim(), 16);
        let cfg = small_cfg();
        let mut env = Env::new(env_cfg).unwrap();
        let mut a = DdpgAgent::new(cfg.clone(), env.state_dim(), 16, &mut rng::stream(9, Stream::NetworkInit)).unwrap();
        let log = run_episode(&mut a, &mut env, &cfg, EpisodeSeeds::uniform(9)).unwrap();
        assert!(log.best_action.theta.iter().all(|&t| t == 0.0));
        assert!(env.action().unwrap().theta.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn hd_baseline_zeroes_user_powers() {
        let hd = baseline_hd(&EnvConfig::default());
        assert!(hd.user_powers.iter().all(|&p| p == 0.0));
        let cfg = small_cfg();
        let mut env = Env::new(hd).unwrap();
        let mut a = RandomAgent::new(env.action_dim());
        let log = run_episode(&mut a, &mut env, &cfg, EpisodeSeeds::uniform(10)).unwrap();
        assert!(log.instant.iter().all(|r| r.is_finite() && *r >= 0.0));
    }

    #[test]
    fn learning_improves_reward_on_tiny_system() {
        let cfg = AgentConfig {
            steps: 2000,
            ..AgentConfig::default()
        };
        let mut wins = 0;
        for seed in 0..5 {
            let mut env = Env::new(tiny_env()).unwrap();
            let mut a = DdpgAgent::new(cfg.clone(), env.state_dim(), env.action_dim(), &mut rng::stream(seed, Stream::NetworkInit)).unwrap();
            let log = run_episode(&mut a, &mut env, &cfg, EpisodeSeeds::uniform(seed)).unwrap();
            let head = log.instant[..200].iter().sum::<f64>() / 200.0;
            let tail = log.instant[1800..].iter().sum::<f64>() / 200.0;
            if tail > head {
                wins += 1;
            }
        }
        assert!(wins >= 4, "improved in {wins} of 5 seeds");
    }
}
