//! The MDP wrapper around the physical layer.
//!
//! A flat action in `[-1, 1]^D_a` decodes to a projected precoder and a
//! set of RIS phases. The observation concatenates, in order: four rate
//! entries, the cascaded channels `G_1d, G_2d, G_1u, G_2u` (re/im
//! interleaved, row-major), the current phase noise, the previous action,
//! per-user transmit powers and per-user received powers.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::channel::{sample_channel_set, sample_phase_noise, ChannelParams, ChannelSet, Geometry, Sizes};
use crate::error::{invalid, Error, Result};
use crate::numerics::{dot, CMat, C64};
use crate::system::{
    dbm_to_watts, project_precoder, Action, Cascade, HwiConfig, LinkBudget, LinkEvaluator, NoiseConfig,
    SystemParams,
};

/// Which parts of the action the agent controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    /// Precoder and RIS phases.
    Full,
    /// Precoder only; RIS phases stay at zero.
    BeamformingOnly,
}

/// How the first action of an episode is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialAction {
    /// Identity-column precoder at full power, zero phases.
    Identity,
    /// Random full-power precoder and uniform phases.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub sizes: Sizes,
    /// Watts.
    pub p_max: f64,
    /// Watts, one per user.
    pub user_powers: Vec<f64>,
    pub hwi: HwiConfig,
    pub noise: NoiseConfig,
    pub channel: ChannelParams,
    /// Fixed node positions; drawn on every reset when absent.
    pub geometry: Option<Geometry>,
    /// Redraw RIS phase noise after every step.
    pub phase_noise_per_step: bool,
    pub action_mode: ActionMode,
    pub initial_action: InitialAction,
}

impl Default for EnvConfig {
    fn default() -> Self {
        let sizes = Sizes::default();
        EnvConfig {
            p_max: dbm_to_watts(20.0),
            user_powers: vec![0.1; sizes.k],
            hwi: HwiConfig::uniform(sizes.k, 0.01, 1.0),
            noise: NoiseConfig::default(),
            channel: ChannelParams::default(),
            geometry: None,
            phase_noise_per_step: true,
            action_mode: ActionMode::Full,
            initial_action: InitialAction::Identity,
            sizes,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.sizes.validate()?;
        self.channel.validate()?;
        self.system_params().validate()?;
        if let Some(g) = &self.geometry {
            g.validate()?;
            if g.users.len() != self.sizes.k || g.eves.len() != self.sizes.l {
                return Err(invalid("geometry", "node counts disagree with sizes"));
            }
        }
        Ok(())
    }

    pub fn system_params(&self) -> SystemParams {
        SystemParams {
            hwi: self.hwi.clone(),
            noise: self.noise.clone(),
            user_powers: self.user_powers.clone(),
            p_max: self.p_max,
        }
    }

    pub fn state_dim(&self) -> usize {
        state_dim(&self.sizes)
    }

    /// Dimension the agent controls under the configured action mode.
    pub fn action_dim(&self) -> usize {
        match self.action_mode {
            ActionMode::Full => action_dim(&self.sizes),
            ActionMode::BeamformingOnly => 2 * self.sizes.nt * self.sizes.k,
        }
    }

    /// Same configuration with every user transmit power zeroed.
    pub fn half_duplex(&self) -> Self {
        EnvConfig {
            user_powers: vec![0.0; self.sizes.k],
            ..self.clone()
        }
    }
}

/// `4 + 2K^2 + 4LK + 2 Nr K + 4K + 3M + 2 Nt K`.
pub fn state_dim(s: &Sizes) -> usize {
    4 + 2 * s.k * s.k + 4 * s.l * s.k + 2 * s.nr * s.k + 4 * s.k + 3 * s.m + 2 * s.nt * s.k
}

/// `2M + 2 Nt K`.
pub fn action_dim(s: &Sizes) -> usize {
    2 * s.m + 2 * s.nt * s.k
}

/// Maps a full-layout flat vector to an action.
///
/// The first `2 Nt K` entries are re/im pairs of `W` taken column by
/// column and scaled by `sqrt(p_max)`; the result is projected onto the
/// power budget. The last `2M` entries are re/im pairs whose angle is the
/// RIS phase; a `(0, 0)` pair maps to phase zero.
pub fn decode_action(flat: &[f64], sizes: &Sizes, p_max: f64) -> Result<Action> {
    let d = action_dim(sizes);
    if flat.len() != d {
        return Err(Error::LengthMismatch {
            what: "flat action",
            expected: d,
            found: flat.len(),
        });
    }
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(invalid("flat action", "non-finite entry"));
    }
    let (nt, k) = (sizes.nt, sizes.k);
    let amp = p_max.sqrt();
    let w = CMat::from_fn(nt, k, |n, i| {
        let at = 2 * (i * nt + n);
        C64::new(flat[at], flat[at + 1]) * amp
    });
    let theta = flat[2 * nt * k..]
        .chunks_exact(2)
        .map(|p| if p[0] == 0.0 && p[1] == 0.0 { 0.0 } else { p[1].atan2(p[0]) })
        .collect();
    Ok(Action {
        w: project_precoder(&w, p_max),
        theta,
    })
}

/// Inverse of [`decode_action`] for actions within the power budget.
pub fn encode_action(action: &Action, p_max: f64) -> Vec<f64> {
    let (nt, k) = action.w.shape();
    let amp = p_max.sqrt();
    let mut out = Vec::with_capacity(2 * nt * k + 2 * action.theta.len());
    for i in 0..k {
        for n in 0..nt {
            let v = action.w[(n, i)] / amp;
            out.push(v.re);
            out.push(v.im);
        }
    }
    for &t in &action.theta {
        out.push(t.cos());
        out.push(t.sin());
    }
    out
}

/// First `K` identity columns scaled to the full power budget, zero phases.
pub fn identity_action(sizes: &Sizes, p_max: f64) -> Action {
    let active = sizes.k.min(sizes.nt);
    let amp = (p_max / active as f64).sqrt();
    Action {
        w: CMat::from_fn(sizes.nt, sizes.k, |n, i| if n == i { C64::new(amp, 0.0) } else { C64::new(0.0, 0.0) }),
        theta: vec![0.0; sizes.m],
    }
}

/// Complex-Gaussian precoder scaled to the full budget, uniform phases.
pub fn random_action<R: Rng + ?Sized>(rng: &mut R, sizes: &Sizes, p_max: f64) -> Action {
    let w = CMat::from_fn(sizes.nt, sizes.k, |_, _| crate::rng::complex_gaussian(rng, 1.0));
    let power = w.frob_norm_sqr();
    let w = if power > 0.0 { w.scale_real((p_max / power).sqrt()) } else { w };
    let theta = (0..sizes.m).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    Action { w, theta }
}

fn push_complex(out: &mut Vec<f64>, m: &CMat) {
    for v in m.as_slice() {
        out.push(v.re);
        out.push(v.im);
    }
}

fn stack(rows: &[Vec<C64>]) -> CMat {
    let cols = rows.first().map_or(0, Vec::len);
    CMat::from_fn(rows.len(), cols, |r, c| rows[r][c])
}

/// Assembles the observation after `action` was applied.
///
/// Rates come from `budget`; cascaded channels and the phase-noise part
/// use `phase_noise`, the realization of the upcoming slot.
pub fn build_state(
    budget: &LinkBudget,
    channels: &ChannelSet,
    phase_noise: &[f64],
    action: &Action,
    p_max: f64,
) -> Result<Vec<f64>> {
    let sizes = channels.sizes();
    if action.w.shape() != (sizes.nt, sizes.k) {
        return Err(Error::DimensionMismatch {
            op: "state precoder",
            left: action.w.shape(),
            right: (sizes.nt, sizes.k),
        });
    }
    let cascade = Cascade::new(channels, &action.theta, phase_noise)?;
    let effective = |rows: &[Vec<C64>]| CMat::from_fn(rows.len(), sizes.k, |r, i| dot(&rows[r], &action.w.col(i)));
    let g1d = effective(&cascade.user_rx);
    let g2d = effective(&cascade.eve_rx);
    let g1u = CMat::from_fn(sizes.nr, sizes.k, |r, i| cascade.bs_rx[i][r]);
    let g2u = stack(&cascade.eve_user);

    let mut s = Vec::with_capacity(state_dim(&sizes));
    s.push(budget.sum_rate_b());
    s.push(budget.sum_rate_s());
    s.push(budget.sum_worst_eve_rate());
    s.push(budget.ssr);
    push_complex(&mut s, &g1d);
    push_complex(&mut s, &g2d);
    push_complex(&mut s, &g1u);
    push_complex(&mut s, &g2u);
    s.extend_from_slice(phase_noise);
    s.extend(encode_action(action, p_max));
    for i in 0..sizes.k {
        let col = action.w.col(i);
        let p = dot(&col.iter().map(|c| c.conj()).collect::<Vec<_>>(), &col);
        s.push(p.re * p.re);
        s.push(p.im * p.im);
    }
    for k in 0..sizes.k {
        let g = g1d[(k, k)];
        s.push(g.re * g.re);
        s.push(g.im * g.im);
    }
    debug_assert_eq!(s.len(), state_dim(&sizes));
    Ok(s)
}

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub state: Vec<f64>,
    /// Equals `budget.ssr`.
    pub reward: f64,
    pub budget: LinkBudget,
    pub action: Action,
}

#[derive(Debug, Clone)]
struct Episode {
    channels: ChannelSet,
    phase_noise: Vec<f64>,
    action: Action,
    state: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Env {
    config: EnvConfig,
    params: SystemParams,
    episode: Option<Episode>,
}

impl Env {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let params = config.system_params();
        Ok(Env {
            config,
            params,
            episode: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn state_dim(&self) -> usize {
        self.config.state_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.config.action_dim()
    }

    /// Draws geometry (unless fixed) and one channel realization.
    pub fn sample_channels<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelSet> {
        let geometry = match &self.config.geometry {
            Some(g) => g.clone(),
            None => Geometry::sample(rng, self.config.sizes.k, self.config.sizes.l),
        };
        sample_channel_set(rng, &geometry, &self.config.channel, &self.config.sizes)
    }

    /// The configured first action; only `Random` consumes `rng`.
    pub fn initial_action<R: Rng + ?Sized>(&self, rng: &mut R) -> Action {
        let s = &self.config.sizes;
        match (self.config.initial_action, self.config.action_mode) {
            (InitialAction::Identity, _) => identity_action(s, self.config.p_max),
            (InitialAction::Random, mode) => {
                let mut a = random_action(rng, s, self.config.p_max);
                if mode == ActionMode::BeamformingOnly {
                    a.theta.iter_mut().for_each(|t| *t = 0.0);
                }
                a
            }
        }
    }

    /// Fresh channels and the configured first action from one stream.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>> {
        let channels = self.sample_channels(rng)?;
        let action = self.initial_action(rng);
        self.reset_with(channels, action)
    }

    /// Starts an episode on given channels and first action.
    pub fn reset_with(&mut self, channels: ChannelSet, action: Action) -> Result<Vec<f64>> {
        channels.validate()?;
        if channels.sizes() != self.config.sizes {
            return Err(invalid("channel set", "sizes disagree with configuration"));
        }
        let budget = LinkEvaluator::new(&channels, &action, &self.params)?.budget();
        let phase_noise = channels.phase_noise.clone();
        let state = build_state(&budget, &channels, &phase_noise, &action, self.config.p_max)?;
        self.episode = Some(Episode {
            channels,
            phase_noise,
            action,
            state: state.clone(),
        });
        Ok(state)
    }

    /// Most recent observation.
    pub fn state(&self) -> Result<&[f64]> {
        Ok(&self.episode.as_ref().ok_or(Error::NotReset)?.state)
    }

    pub fn channels(&self) -> Result<&ChannelSet> {
        Ok(&self.episode.as_ref().ok_or(Error::NotReset)?.channels)
    }

    /// Last applied action.
    pub fn action(&self) -> Result<&Action> {
        Ok(&self.episode.as_ref().ok_or(Error::NotReset)?.action)
    }

    /// Phase-noise realization the next step is evaluated under.
    pub fn phase_noise(&self) -> Result<&[f64]> {
        Ok(&self.episode.as_ref().ok_or(Error::NotReset)?.phase_noise)
    }

    /// Decodes an agent-facing action under the configured mode.
    pub fn decode(&self, flat: &[f64]) -> Result<Action> {
        let s = &self.config.sizes;
        match self.config.action_mode {
            ActionMode::Full => decode_action(flat, s, self.config.p_max),
            ActionMode::BeamformingOnly => {
                if flat.len() != self.action_dim() {
                    return Err(Error::LengthMismatch {
                        what: "flat action",
                        expected: self.action_dim(),
                        found: flat.len(),
                    });
                }
                let mut full = flat.to_vec();
                for _ in 0..s.m {
                    full.extend_from_slice(&[1.0, 0.0]);
                }
                decode_action(&full, s, self.config.p_max)
            }
        }
    }

    /// Agent-facing encoding of `action` under the configured mode.
    pub fn encode(&self, action: &Action) -> Vec<f64> {
        let mut flat = encode_action(action, self.config.p_max);
        flat.truncate(self.action_dim());
        flat
    }

    /// Applies `flat` under the current phase noise, then advances the
    /// phase noise (when enabled) and observes the next state.
    pub fn step<R: Rng + ?Sized>(&mut self, flat: &[f64], rng: &mut R) -> Result<StepResult> {
        if self.episode.is_none() {
            return Err(Error::NotReset);
        }
        let action = self.decode(flat)?;
        let per_step = self.config.phase_noise_per_step;
        let m = self.config.sizes.m;
        let p_max = self.config.p_max;
        let ep = self.episode.as_mut().expect("checked above");
        let budget = LinkEvaluator::with_phase_noise(&ep.channels, &action, &ep.phase_noise, &self.params)?.budget();
        if per_step {
            ep.phase_noise = sample_phase_noise(rng, m);
        }
        let state = build_state(&budget, &ep.channels, &ep.phase_noise, &action, p_max)?;
        ep.action = action.clone();
        ep.state = state.clone();
        Ok(StepResult {
            state,
            reward: budget.ssr,
            budget,
            action,
        })
    }
}

/// Per-coordinate running mean and variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitener {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Whitener {
    pub fn new(dim: usize) -> Self {
        Whitener {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn update(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.mean.len() {
            return Err(Error::LengthMismatch {
                what: "whitener input",
                expected: self.mean.len(),
                found: x.len(),
            });
        }
        self.count += 1;
        let n = self.count as f64;
        for i in 0..x.len() {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / n;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
        Ok(())
    }

    pub fn std(&self, i: usize) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.m2[i] / self.count as f64).sqrt()
        }
    }

    /// `(x - mean) / max(std, 1e-8)` with the current statistics.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| (v - self.mean[i]) / self.std(i).max(1e-8))
            .collect()
    }

    /// Folds `x` into the statistics, then normalizes it.
    pub fn whiten(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.update(x)?;
        Ok(self.normalize(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::evaluate;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn env() -> Env {
        Env::new(EnvConfig::default()).unwrap()
    }

    #[test]
    fn default_dimensions() {
        let e = env();
        assert_eq!(e.state_dim(), 92);
        assert_eq!(e.action_dim(), 32);
        let s = e.clone().reset(&mut rng(1)).unwrap();
        assert_eq!(s.len(), 92);
        assert!(s.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn reset_is_seeded_and_uses_identity() {
        let mut a = env();
        let mut b = env();
        assert_eq!(a.reset(&mut rng(2)).unwrap(), b.reset(&mut rng(2)).unwrap());
        let th = a.action().unwrap().theta_matrix();
        for m in 0..th.rows() {
            assert_eq!(th[(m, m)], C64::new(1.0, 0.0));
        }
        let w = &a.action().unwrap().w;
        assert!((w.frob_norm_sqr() - a.config().p_max).abs() < 1e-15);
    }

    #[test]
    fn step_before_reset_fails() {
        let mut e = env();
        assert_eq!(e.step(&[0.0; 32], &mut rng(0)).unwrap_err(), Error::NotReset);
    }

    #[test]
    fn decode_examples() {
        let s = Sizes::default();
        let a = decode_action(&[0.0; 32], &s, 0.1).unwrap();
        assert!(a.w.as_slice().iter().all(|v| *v == C64::new(0.0, 0.0)));
        let th = a.theta_matrix();
        for m in 0..8 {
            assert_eq!(th[(m, m)], C64::new(1.0, 0.0));
        }
        assert!(decode_action(&[0.0; 31], &s, 0.1).is_err());
        let big = decode_action(&[1.0; 32], &s, 0.1).unwrap();
        assert!(big.w.frob_norm_sqr() <= 0.1);
    }

    #[test]
    fn encode_then_decode_round_trips() {
        let s = Sizes::default();
        let a = random_action(&mut rng(3), &s, 0.1);
        let b = decode_action(&encode_action(&a, 0.1), &s, 0.1).unwrap();
        for (x, y) in a.w.as_slice().iter().zip(b.w.as_slice()) {
            assert!((x - y).norm() < 1e-12);
        }
        for (x, y) in a.theta.iter().zip(&b.theta) {
            let d = (x - y).rem_euclid(2.0 * PI);
            assert!(d < 1e-12 || 2.0 * PI - d < 1e-12);
        }
    }

    #[test]
    fn reward_matches_system_ssr_exactly() {
        let mut e = env();
        e.reset(&mut rng(4)).unwrap();
        let flat: Vec<f64> = (0..32).map(|i| ((i as f64) * 0.37).sin()).collect();
        let mut channels = e.channels().unwrap().clone();
        channels.phase_noise = e.phase_noise().unwrap().to_vec();
        let out = e.step(&flat, &mut rng(5)).unwrap();
        let expect = evaluate(&channels, &decode_action(&flat, &Sizes::default(), 0.1).unwrap(), e.params()).unwrap();
        assert_eq!(out.reward, expect.ssr);
        assert_eq!(out.reward, out.budget.ssr);
        assert!(out.reward >= 0.0);
    }

    #[test]
    fn step_is_deterministic() {
        let run = || {
            let mut e = env();
            e.reset(&mut rng(6)).unwrap();
            let mut r = rng(7);
            let a = e.step(&[0.3; 32], &mut r).unwrap();
            let b = e.step(&[-0.2; 32], &mut r).unwrap();
            (a, b)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn frozen_phase_noise_repeats_reward() {
        let mut e = Env::new(EnvConfig {
            phase_noise_per_step: false,
            ..EnvConfig::default()
        })
        .unwrap();
        e.reset(&mut rng(8)).unwrap();
        let mut r = rng(9);
        let a = e.step(&[0.4; 32], &mut r).unwrap();
        let b = e.step(&[0.4; 32], &mut r).unwrap();
        assert_eq!(a.reward, b.reward);
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn state_layout_blocks() {
        let mut e = env();
        e.reset(&mut rng(10)).unwrap();
        let out = e.step(&[0.0; 32], &mut rng(11)).unwrap();
        let s = &out.state;
        assert_eq!(s[3], out.reward);
        // zero precoder: G_1d, G_2d and both power parts vanish
        assert!(s[4..4 + 8 + 8].iter().all(|&v| v == 0.0));
        assert!(s[92 - 8..].iter().all(|&v| v == 0.0));
        let pn = e.phase_noise().unwrap();
        assert_eq!(&s[4 + 8 + 16 + 16..4 + 8 + 16 + 16 + 8], pn);
    }

    #[test]
    fn permuting_eavesdroppers_permutes_their_rows() {
        let e = env();
        let ch = e.sample_channels(&mut rng(12)).unwrap();
        let mut sw = ch.clone();
        sw.g_d.swap(0, 1);
        sw.g_u.swap(0, 1);
        let a = random_action(&mut rng(13), &Sizes::default(), 0.1);
        let p = e.params();
        let s1 = build_state(&evaluate(&ch, &a, p).unwrap(), &ch, &ch.phase_noise, &a, 0.1).unwrap();
        let s2 = build_state(&evaluate(&sw, &a, p).unwrap(), &sw, &sw.phase_noise, &a, 0.1).unwrap();
        let (k, l, nr) = (2, 2, 4);
        let g2d = 4 + 2 * k * k;
        let g1u = g2d + 2 * l * k;
        let g2u = g1u + 2 * nr * k;
        let row = 2 * k;
        for (base, _) in [(g2d, 0), (g2u, 0)] {
            assert_eq!(s1[base..base + row], s2[base + row..base + 2 * row]);
            assert_eq!(s1[base + row..base + 2 * row], s2[base..base + row]);
        }
        assert_eq!(s1[..g2d], s2[..g2d]);
        assert_eq!(s1[g1u..g2u], s2[g1u..g2u]);
        assert_eq!(s1[g2u + 2 * l * k..], s2[g2u + 2 * l * k..]);
    }

    #[test]
    fn beamforming_only_keeps_phases() {
        let mut e = Env::new(EnvConfig {
            action_mode: ActionMode::BeamformingOnly,
            ..EnvConfig::default()
        })
        .unwrap();
        assert_eq!(e.action_dim(), 16);
        e.reset(&mut rng(14)).unwrap();
        let mut r = rng(15);
        for i in 0..5 {
            let out = e.step(&[0.1 * i as f64; 16], &mut r).unwrap();
            assert!(out.action.theta.iter().all(|&t| t == 0.0));
        }
        assert_eq!(e.encode(e.action().unwrap()).len(), 16);
    }

    #[test]
    fn half_duplex_zeroes_uplink() {
        let mut e = Env::new(EnvConfig::default().half_duplex()).unwrap();
        e.reset(&mut rng(16)).unwrap();
        let out = e.step(&[0.5; 32], &mut rng(17)).unwrap();
        assert!(out.budget.rate_s.iter().all(|&r| r == 0.0));
        assert!(out.budget.sinr_e_up.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn whitener_examples() {
        let mut w = Whitener::new(1);
        for _ in 0..10 {
            assert_eq!(w.whiten(&[3.5]).unwrap(), vec![0.0]);
        }
        let mut w = Whitener::new(3);
        let mut r = rng(18);
        let mut outs = Vec::new();
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut r)).collect();
            w.update(&x).unwrap();
            outs.push(x);
        }
        for c in 0..3 {
            let z: Vec<f64> = outs.iter().map(|x| w.normalize(x)[c]).collect();
            let mean = z.iter().sum::<f64>() / z.len() as f64;
            let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.len() as f64).sqrt();
            assert!(mean.abs() <= 0.05 && (0.9..=1.1).contains(&sd), "{mean} {sd}");
        }
        let lo = w.normalize(&[-1.0, 0.0, 0.0]);
        let hi = w.normalize(&[1.0, 0.0, 0.0]);
        assert!(lo[0] < hi[0]);
        assert!(w.update(&[0.0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn state_length_matches_formula(k in 1usize..=8, l in 1usize..=8, m in 1usize..=8, nt in 1usize..=8, nr in 1usize..=8, seed in any::<u64>()) {
            let sizes = Sizes { m, nt, nr, k, l };
            let cfg = EnvConfig {
                sizes,
                user_powers: vec![0.1; k],
                hwi: HwiConfig::uniform(k, 0.01, 1.0),
                ..EnvConfig::default()
            };
            let mut e = Env::new(cfg).unwrap();
            let mut r = rng(seed);
            let s = e.reset(&mut r).unwrap();
            prop_assert_eq!(s.len(), state_dim(&sizes));
            let flat: Vec<f64> = (0..e.action_dim()).map(|_| r.random_range(-1.0..=1.0)).collect();
            let out = e.step(&flat, &mut r).unwrap();
            prop_assert_eq!(out.state.len(), state_dim(&sizes));
            prop_assert!(out.state.iter().all(|v| v.is_finite()));
            prop_assert!(out.reward >= 0.0);
        }

        #[test]
        fn decoded_actions_satisfy_constraints(seed in any::<u64>(), p_dbm in 0.0f64..40.0) {
            let s = Sizes::default();
            let p = dbm_to_watts(p_dbm);
            let mut r = rng(seed);
            let flat: Vec<f64> = (0..32).map(|_| r.random_range(-1.0..=1.0)).collect();
            let a = decode_action(&flat, &s, p).unwrap();
            prop_assert!(a.w.frob_norm_sqr() <= p);
            let th = a.theta_matrix();
            for m in 0..s.m {
                prop_assert!((th[(m, m)].norm() - 1.0).abs() <= 1e-9);
            }
        }
    }
}
