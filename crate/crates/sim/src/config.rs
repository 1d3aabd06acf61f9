//! Flat `key = value` configuration with dotted keys.
//!
//! Defaults reproduce the simulation and network tables. Every key can be
//! overridden from a file or the command line; unknown keys and
//! out-of-range values are rejected with the key name.

use std::fmt::Write as _;
use std::path::Path;

use risfd_core::agents::AgentConfig;
use risfd_core::channel::{ChannelParams, Sizes};
use risfd_core::env::{ActionMode, EnvConfig, InitialAction};
use risfd_core::system::{dbm_to_watts, HwiConfig, NoiseConfig};

use crate::error::{io_err, Result, SimError};
use crate::units::{parse_bool, parse_f64, parse_power};

/// Every resolved simulation and training parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub nt: usize,
    pub nr: usize,
    /// Watts.
    pub p_max: f64,
    /// Watts, every user.
    pub user_power: f64,
    pub kappa_tx_bs: f64,
    pub kappa_rx_bs: f64,
    pub kappa_tx_user: f64,
    pub kappa_rx_user: f64,
    pub rho_si: f64,
    pub noise_density_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub residual_factor: f64,
    pub path_loss_exponent: f64,
    pub pl0_db: f64,
    pub rician_factor: f64,
    pub spacing: f64,
    pub phase_noise_per_step: bool,
    pub initial_action: InitialAction,
    pub agent: AgentConfig,
}

impl Default for Settings {
    fn default() -> Self {
        let ch = ChannelParams::default();
        Settings {
            k: 2,
            l: 2,
            m: 8,
            nt: 4,
            nr: 4,
            p_max: dbm_to_watts(20.0),
            user_power: 0.1,
            kappa_tx_bs: 0.01,
            kappa_rx_bs: 0.01,
            kappa_tx_user: 0.01,
            kappa_rx_user: 0.01,
            rho_si: 1.0,
            noise_density_dbm_hz: -174.0,
            bandwidth_hz: 10e6,
            residual_factor: 1.1,
            path_loss_exponent: ch.path_loss_exponent,
            pl0_db: ch.pl0_db,
            rician_factor: ch.rician_factor,
            spacing: ch.spacing,
            phase_noise_per_step: true,
            initial_action: InitialAction::Identity,
            agent: AgentConfig::default(),
        }
    }
}

/// Keys listed in resolved-config dumps, in order.
pub const KEYS: &[&str] = &[
    "system.k",
    "system.l",
    "system.m",
    "system.nt",
    "system.nr",
    "power.p_max",
    "power.user",
    "hwi.kappa_tx_bs",
    "hwi.kappa_rx_bs",
    "hwi.kappa_tx_user",
    "hwi.kappa_rx_user",
    "hwi.rho_si",
    "noise.density_dbm_hz",
    "noise.bandwidth_hz",
    "noise.residual_factor",
    "channel.path_loss_exponent",
    "channel.pl0_db",
    "channel.rician_factor",
    "channel.spacing",
    "env.phase_noise_per_step",
    "env.initial_action",
    "agent.gamma",
    "agent.lr_actor",
    "agent.lr_critic",
    "agent.tau_actor",
    "agent.tau_critic",
    "agent.batch",
    "agent.capacity",
    "agent.steps",
    "agent.hidden",
    "agent.noise_sigma0",
    "agent.noise_decay",
    "agent.noise_floor",
    "agent.clear_replay",
    "agent.smoothing",
    "agent.td3_policy_delay",
    "agent.td3_smoothing_sigma",
    "agent.td3_smoothing_clip",
];

/// Write-only shorthand: sets all four transceiver distortion factors.
pub const KAPPA_ALIAS: &str = "hwi.kappa";

fn bad(key: &str, value: &str, expected: &str) -> SimError {
    SimError::InvalidValue {
        key: key.to_owned(),
        value: value.to_owned(),
        expected: expected.to_owned(),
    }
}

fn real_in(key: &str, value: &str, lo: f64, hi: f64, expected: &str) -> Result<f64> {
    parse_f64(value)
        .filter(|v| (lo..=hi).contains(v))
        .ok_or_else(|| bad(key, value, expected))
}

fn positive(key: &str, value: &str) -> Result<f64> {
    parse_f64(value).filter(|&v| v > 0.0).ok_or_else(|| bad(key, value, "a positive number"))
}

fn count(key: &str, value: &str, max: usize) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|v| (1..=max).contains(v))
        .ok_or_else(|| bad(key, value, &format!("an integer in [1, {max}]")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    parse_bool(value).ok_or_else(|| bad(key, value, "true or false"))
}

const UNIT: (f64, f64, &str) = (0.0, 1.0, "a number in [0, 1]");

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (lo, hi, unit) = UNIT;
        match key {
            "system.k" => self.k = count(key, value, 64)?,
            "system.l" => self.l = count(key, value, 64)?,
            "system.m" => self.m = count(key, value, 1024)?,
            "system.nt" => self.nt = count(key, value, 256)?,
            "system.nr" => self.nr = count(key, value, 256)?,
            "power.p_max" => {
                self.p_max = parse_power(value)
                    .filter(|&w| w > 0.0)
                    .ok_or_else(|| bad(key, value, "a positive power such as 20dBm, 100mW or 0.1W"))?
            }
            "power.user" => {
                self.user_power = parse_power(value)
                    .filter(|&w| w >= 0.0)
                    .ok_or_else(|| bad(key, value, "a nonnegative power such as 20dBm, 100mW or 0.1W"))?
            }
            KAPPA_ALIAS => {
                let v = real_in(key, value, lo, hi, unit)?;
                self.kappa_tx_bs = v;
                self.kappa_rx_bs = v;
                self.kappa_tx_user = v;
                self.kappa_rx_user = v;
            }
            "hwi.kappa_tx_bs" => self.kappa_tx_bs = real_in(key, value, lo, hi, unit)?,
            "hwi.kappa_rx_bs" => self.kappa_rx_bs = real_in(key, value, lo, hi, unit)?,
            "hwi.kappa_tx_user" => self.kappa_tx_user = real_in(key, value, lo, hi, unit)?,
            "hwi.kappa_rx_user" => self.kappa_rx_user = real_in(key, value, lo, hi, unit)?,
            "hwi.rho_si" => self.rho_si = real_in(key, value, lo, hi, unit)?,
            "noise.density_dbm_hz" => {
                self.noise_density_dbm_hz = real_in(key, value, -300.0, 0.0, "a density in [-300, 0] dBm/Hz")?
            }
            "noise.bandwidth_hz" => self.bandwidth_hz = positive(key, value)?,
            "noise.residual_factor" => {
                self.residual_factor = real_in(key, value, 1.0, 1e6, "a factor in [1, 1e6]")?
            }
            "channel.path_loss_exponent" => {
                self.path_loss_exponent = real_in(key, value, 1.0, 6.0, "an exponent in [1, 6]")?
            }
            "channel.pl0_db" => self.pl0_db = real_in(key, value, -200.0, 0.0, "a loss in [-200, 0] dB")?,
            "channel.rician_factor" => {
                self.rician_factor = real_in(key, value, 0.0, 1e6, "a factor in [0, 1e6]")?
            }
            "channel.spacing" => self.spacing = real_in(key, value, 1e-3, 10.0, "a spacing in [0.001, 10] wavelengths")?,
            "env.phase_noise_per_step" => self.phase_noise_per_step = flag(key, value)?,
            "env.initial_action" => {
                self.initial_action = match value.trim() {
                    "identity" => InitialAction::Identity,
                    "random" => InitialAction::Random,
                    _ => return Err(bad(key, value, "identity or random")),
                }
            }
            "agent.gamma" => self.agent.gamma = real_in(key, value, lo, hi, unit)?,
            "agent.lr_actor" => self.agent.lr_actor = real_in(key, value, 1e-12, 1.0, "a rate in (0, 1]")?,
            "agent.lr_critic" => self.agent.lr_critic = real_in(key, value, 1e-12, 1.0, "a rate in (0, 1]")?,
            "agent.tau_actor" => self.agent.tau_actor = real_in(key, value, lo, hi, unit)?,
            "agent.tau_critic" => self.agent.tau_critic = real_in(key, value, lo, hi, unit)?,
            "agent.batch" => self.agent.batch = count(key, value, 1 << 16)?,
            "agent.capacity" => self.agent.capacity = count(key, value, 1 << 24)?,
            "agent.steps" => self.agent.steps = count(key, value, 1 << 24)?,
            "agent.hidden" => self.agent.hidden = count(key, value, 4096)?,
            "agent.noise_sigma0" => self.agent.noise.sigma0 = real_in(key, value, 0.0, 10.0, "a deviation in [0, 10]")?,
            "agent.noise_decay" => self.agent.noise.decay = real_in(key, value, lo, hi, unit)?,
            "agent.noise_floor" => self.agent.noise.floor = real_in(key, value, 0.0, 10.0, "a deviation in [0, 10]")?,
            "agent.clear_replay" => self.agent.clear_replay = flag(key, value)?,
            "agent.smoothing" => self.agent.smoothing = real_in(key, value, lo, hi, unit)?,
            "agent.td3_policy_delay" => self.agent.td3.policy_delay = count(key, value, 1000)? as u64,
            "agent.td3_smoothing_sigma" => {
                self.agent.td3.smoothing_sigma = real_in(key, value, 0.0, 10.0, "a deviation in [0, 10]")?
            }
            "agent.td3_smoothing_clip" => {
                self.agent.td3.smoothing_clip = real_in(key, value, 0.0, 10.0, "a bound in [0, 10]")?
            }
            _ => return Err(SimError::UnknownKey(key.to_owned())),
        }
        Ok(())
    }

    /// Canonical text of one key, parseable by [`Settings::set`].
    pub fn get(&self, key: &str) -> Result<String> {
        let a = &self.agent;
        Ok(match key {
            "system.k" => self.k.to_string(),
            "system.l" => self.l.to_string(),
            "system.m" => self.m.to_string(),
            "system.nt" => self.nt.to_string(),
            "system.nr" => self.nr.to_string(),
            "power.p_max" => format!("{}W", self.p_max),
            "power.user" => format!("{}W", self.user_power),
            "hwi.kappa_tx_bs" => self.kappa_tx_bs.to_string(),
            "hwi.kappa_rx_bs" => self.kappa_rx_bs.to_string(),
            "hwi.kappa_tx_user" => self.kappa_tx_user.to_string(),
            "hwi.kappa_rx_user" => self.kappa_rx_user.to_string(),
            "hwi.rho_si" => self.rho_si.to_string(),
            "noise.density_dbm_hz" => self.noise_density_dbm_hz.to_string(),
            "noise.bandwidth_hz" => self.bandwidth_hz.to_string(),
            "noise.residual_factor" => self.residual_factor.to_string(),
            "channel.path_loss_exponent" => self.path_loss_exponent.to_string(),
            "channel.pl0_db" => self.pl0_db.to_string(),
            "channel.rician_factor" => self.rician_factor.to_string(),
            "channel.spacing" => self.spacing.to_string(),
            "env.phase_noise_per_step" => self.phase_noise_per_step.to_string(),
            "env.initial_action" => match self.initial_action {
                InitialAction::Identity => "identity".into(),
                InitialAction::Random => "random".into(),
            },
            "agent.gamma" => a.gamma.to_string(),
            "agent.lr_actor" => a.lr_actor.to_string(),
            "agent.lr_critic" => a.lr_critic.to_string(),
            "agent.tau_actor" => a.tau_actor.to_string(),
            "agent.tau_critic" => a.tau_critic.to_string(),
            "agent.batch" => a.batch.to_string(),
            "agent.capacity" => a.capacity.to_string(),
            "agent.steps" => a.steps.to_string(),
            "agent.hidden" => a.hidden.to_string(),
            "agent.noise_sigma0" => a.noise.sigma0.to_string(),
            "agent.noise_decay" => a.noise.decay.to_string(),
            "agent.noise_floor" => a.noise.floor.to_string(),
            "agent.clear_replay" => a.clear_replay.to_string(),
            "agent.smoothing" => a.smoothing.to_string(),
            "agent.td3_policy_delay" => a.td3.policy_delay.to_string(),
            "agent.td3_smoothing_sigma" => a.td3.smoothing_sigma.to_string(),
            "agent.td3_smoothing_clip" => a.td3.smoothing_clip.to_string(),
            _ => return Err(SimError::UnknownKey(key.to_owned())),
        })
    }

    /// `key=value` pairs for every key in [`KEYS`], space separated.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (i, key) in KEYS.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{key}={}", self.get(key).expect("listed keys resolve"));
        }
        s
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| SimError::Syntax {
                path: origin.to_owned(),
                line: i + 1,
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        self.apply_text(&text, path)
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, pairs: &[S]) -> Result<()> {
        for p in pairs {
            let p = p.as_ref();
            let (key, value) = p.split_once('=').ok_or_else(|| bad("override", p, "key=value"))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn sizes(&self) -> Sizes {
        Sizes {
            m: self.m,
            nt: self.nt,
            nr: self.nr,
            k: self.k,
            l: self.l,
        }
    }

    pub fn noise(&self) -> NoiseConfig {
        NoiseConfig::from_density(self.noise_density_dbm_hz, self.bandwidth_hz, self.residual_factor)
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            sizes: self.sizes(),
            p_max: self.p_max,
            user_powers: vec![self.user_power; self.k],
            hwi: HwiConfig {
                kappa_tx_bs: self.kappa_tx_bs,
                kappa_rx_bs: self.kappa_rx_bs,
                kappa_tx_user: vec![self.kappa_tx_user; self.k],
                kappa_rx_user: vec![self.kappa_rx_user; self.k],
                rho_si: self.rho_si,
            },
            noise: self.noise(),
            channel: ChannelParams {
                path_loss_exponent: self.path_loss_exponent,
                pl0_db: self.pl0_db,
                rician_factor: self.rician_factor,
                spacing: self.spacing,
            },
            geometry: None,
            phase_noise_per_step: self.phase_noise_per_step,
            action_mode: ActionMode::Full,
            initial_action: self.initial_action,
        }
    }

    pub fn agent_config(&self) -> AgentConfig {
        self.agent.clone()
    }

    /// Cross-field checks that single keys cannot express.
    pub fn validate(&self) -> Result<()> {
        self.env_config().validate()?;
        self.agent.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_tables() {
        let s = Settings::default();
        let env = s.env_config();
        assert_eq!(env.user_powers, vec![0.1, 0.1]);
        assert_eq!(env.channel.path_loss_exponent, 2.0);
        assert_eq!(env.channel.rician_factor, 10.0);
        assert_eq!(env.hwi.rho_si, 1.0);
        assert!((s.p_max - 0.1).abs() < 1e-15);
        let a = s.agent_config();
        assert_eq!((a.gamma, a.lr_actor, a.lr_critic, a.batch, a.capacity, a.steps), (0.9, 5e-4, 1e-3, 128, 100_000, 20_000));
        // -174 dBm/Hz over 10 MHz is -104 dBm
        let sigma2_mw = s.noise().sigma2 * 1e3;
        assert!((sigma2_mw / 3.98e-11 - 1.0).abs() < 0.01);
        assert_eq!(env.state_dim(), 92);
    }

    #[test]
    fn empty_file_keeps_defaults() {
        let mut s = Settings::default();
        s.apply_text("# nothing\n\n", Path::new("x")).unwrap();
        assert_eq!(s, Settings::default());
    }

    #[test]
    fn overrides_and_errors() {
        let mut s = Settings::default();
        s.apply_overrides(&["power.p_max=30dBm", "hwi.kappa=0.05", "system.m = 16"]).unwrap();
        assert!((s.p_max - 1.0).abs() < 1e-12);
        assert_eq!((s.kappa_tx_bs, s.kappa_rx_user, s.m), (0.05, 0.05, 16));
        match s.set("agent.gama", "0.5") {
            Err(SimError::UnknownKey(k)) => assert_eq!(k, "agent.gama"),
            other => panic!("{other:?}"),
        }
        let e = s.set("agent.gamma", "1.5").unwrap_err().to_string();
        assert!(e.contains("agent.gamma") && e.contains("[0, 1]"), "{e}");
        assert!(s.apply_text("system.k 3", Path::new("cfg")).is_err());
    }

    #[test]
    fn dump_round_trips() {
        let mut s = Settings::default();
        s.apply_overrides(&["power.p_max=17dBm", "agent.lr_actor=0.0001", "env.initial_action=random"]).unwrap();
        let mut t = Settings::default();
        let dump = s.dump();
        let pairs: Vec<&str> = dump.split(' ').collect();
        t.apply_overrides(&pairs).unwrap();
        assert_eq!(s, t);
        for key in KEYS {
            assert!(s.dump().contains(&format!("{key}=")));
        }
    }
}
