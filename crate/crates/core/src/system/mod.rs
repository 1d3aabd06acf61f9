//! Closed-form link evaluation: power projection, MRC combining, the
//! interference-plus-noise terms at every receiver, SINRs, rates and the
//! sum secrecy rate.
//!
//! Every receiver sees the BS and users only through the RIS, so all
//! quantities are built from a handful of cascaded channels that depend on
//! the reflection vector `theta_m * phi_m` (see [`Cascade`]).

pub mod oracle;

use alloc::vec;
use alloc::vec::Vec;


#[allow(unused_imports)]
use num_traits::Float;
use crate::channel::ChannelSet;
use crate::error::{invalid, Error, Result};
use crate::numerics::{dot, inner, norm_sqr, CMat, C64};

/// Transceiver impairment levels.
#[derive(Debug, Clone, PartialEq)]
pub struct HwiConfig {
    /// BS transmit distortion scale.
    pub kappa_tx_bs: f64,
    /// BS receive distortion scale.
    pub kappa_rx_bs: f64,
    /// Per-user transmit distortion scale.
    pub kappa_tx_user: Vec<f64>,
    /// Per-user receive distortion scale.
    pub kappa_rx_user: Vec<f64>,
    /// Residual self-interference coefficient at the users.
    pub rho_si: f64,
}

impl HwiConfig {
    /// Same `kappa` on every transceiver.
    pub fn uniform(users: usize, kappa: f64, rho_si: f64) -> Self {
        HwiConfig {
            kappa_tx_bs: kappa,
            kappa_rx_bs: kappa,
            kappa_tx_user: vec![kappa; users],
            kappa_rx_user: vec![kappa; users],
            rho_si,
        }
    }

    pub fn ideal(users: usize) -> Self {
        Self::uniform(users, 0.0, 0.0)
    }

    pub fn validate(&self, users: usize) -> Result<()> {
        let all = [self.kappa_tx_bs, self.kappa_rx_bs]
            .into_iter()
            .chain(self.kappa_tx_user.iter().copied())
            .chain(self.kappa_rx_user.iter().copied());
        for k in all {
            if !(k >= 0.0) || !k.is_finite() {
                return Err(invalid("impairment scale", k));
            }
        }
        if self.kappa_tx_user.len() != users || self.kappa_rx_user.len() != users {
            return Err(invalid("impairment config", "need one scale per user"));
        }
        if !(0.0..=1.0).contains(&self.rho_si) {
            return Err(invalid("self-interference coefficient", self.rho_si));
        }
        Ok(())
    }
}

/// Noise powers in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Thermal noise at a user.
    pub sigma2: f64,
    /// User noise plus residual loop interference.
    pub sigma_d2: f64,
    /// Per-antenna residual noise at the BS after SI/LI cancellation.
    pub delta_u2: f64,
    /// Eavesdropper noise while listening to the downlink.
    pub mu_d2: f64,
    /// Eavesdropper noise while listening to the uplink.
    pub mu_u2: f64,
}

impl NoiseConfig {
    /// Thermal noise from a density and bandwidth. The user and BS
    /// residuals are `residual_factor` times thermal; eavesdroppers see
    /// thermal noise only.
    pub fn from_density(dbm_per_hz: f64, bandwidth_hz: f64, residual_factor: f64) -> Self {
        let sigma2 = dbm_to_watts(dbm_per_hz + 10.0 * bandwidth_hz.log10());
        NoiseConfig {
            sigma2,
            sigma_d2: residual_factor * sigma2,
            delta_u2: residual_factor * sigma2,
            mu_d2: sigma2,
            mu_u2: sigma2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.sigma2, self.sigma_d2, self.delta_u2, self.mu_d2, self.mu_u2] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid("noise power", v));
            }
        }
        Ok(())
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::from_density(-174.0, 10e6, 1.1)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Everything besides channels and the action that a link evaluation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub hwi: HwiConfig,
    pub noise: NoiseConfig,
    /// Uplink transmit power of each user, watts. All zero is half duplex.
    pub user_powers: Vec<f64>,
    /// BS transmit power budget, watts.
    pub p_max: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let k = self.user_powers.len();
        self.hwi.validate(k)?;
        self.noise.validate()?;
        if self.user_powers.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(invalid("user power", "must be finite and nonnegative"));
        }
        if !(self.p_max > 0.0) || !self.p_max.is_finite() {
            return Err(invalid("BS power budget", self.p_max));
        }
        Ok(())
    }
}

/// BS precoder plus RIS phases (unit amplitudes).
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    /// `Nt x K`, column k serves user k.
    pub w: CMat,
    /// RIS phase per element, radians.
    pub theta: Vec<f64>,
}

impl Action {
    pub fn theta_matrix(&self) -> CMat {
        build_theta(&self.theta)
    }
}

/// Scales `w` onto the power budget when it exceeds it.
pub fn project_precoder(w: &CMat, p_max: f64) -> CMat {
    let power = w.frob_norm_sqr();
    if power <= p_max {
        w.clone()
    } else {
        let mut f = p_max.sqrt() / power.sqrt();
        let mut out = w.scale_real(f);
        // rounding can leave the scaled power one ulp above the budget
        while out.frob_norm_sqr() > p_max {
            f *= 1.0 - f64::EPSILON;
            out = w.scale_real(f);
        }
        out
    }
}

/// `diag(e^{j theta_m})`.
pub fn build_theta(phases: &[f64]) -> CMat {
    let d: Vec<C64> = phases.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    CMat::diag(&d)
}

/// The cascaded channels for one reflection setting.
#[derive(Debug, Clone)]
pub struct Cascade {
    /// `theta_m * phi_m`.
    pub reflect: Vec<C64>,
    /// `h_{d,k}^H Theta Phi H_d`, one `Nt` row per user.
    pub user_rx: Vec<Vec<C64>>,
    /// `g_{d,l}^H Theta Phi H_d`, one `Nt` row per eavesdropper.
    pub eve_rx: Vec<Vec<C64>>,
    /// `H_u^H Theta Phi h_{u,i}`, one `Nr` vector per user.
    pub bs_rx: Vec<Vec<C64>>,
    /// `h_{d,k}^H Theta Phi h_{u,i}` indexed `[k][i]`.
    pub user_user: Vec<Vec<C64>>,
    /// `g_{u,l}^H Theta Phi h_{u,i}` indexed `[l][i]`.
    pub eve_user: Vec<Vec<C64>>,
}

impl Cascade {
    pub fn new(channels: &ChannelSet, theta: &[f64], phase_noise: &[f64]) -> Result<Self> {
        let m = channels.h_d_bs.rows();
        if theta.len() != m {
            return Err(Error::LengthMismatch {
                what: "RIS phases",
                expected: m,
                found: theta.len(),
            });
        }
        if phase_noise.len() != m {
            return Err(Error::LengthMismatch {
                what: "phase noise",
                expected: m,
                found: phase_noise.len(),
            });
        }
        let reflect: Vec<C64> = theta
            .iter()
            .zip(phase_noise)
            .map(|(&t, &p)| C64::from_polar(1.0, t) * C64::from_polar(1.0, p))
            .collect();
        // x^H diag(r) Y for an M x 1 vector x and M x n matrix Y
        let through = |x: &CMat, y: &CMat| -> Vec<C64> {
            (0..y.cols())
                .map(|n| (0..m).map(|i| x[(i, 0)].conj() * reflect[i] * y[(i, n)]).sum())
                .collect()
        };
        let user_rx = channels.h_d.iter().map(|h| through(h, &channels.h_d_bs)).collect();
        let eve_rx = channels.g_d.iter().map(|g| through(g, &channels.h_d_bs)).collect();
        let bs_rx = channels
            .h_u
            .iter()
            .map(|h| {
                (0..channels.h_u_bs.cols())
                    .map(|n| (0..m).map(|i| channels.h_u_bs[(i, n)].conj() * reflect[i] * h[(i, 0)]).sum())
                    .collect()
            })
            .collect();
        let user_user = channels
            .h_d
            .iter()
            .map(|hd| channels.h_u.iter().map(|hu| through(hd, hu)[0]).collect())
            .collect();
        let eve_user = channels
            .g_u
            .iter()
            .map(|g| channels.h_u.iter().map(|hu| through(g, hu)[0]).collect())
            .collect();
        Ok(Cascade {
            reflect,
            user_rx,
            eve_rx,
            bs_rx,
            user_user,
            eve_user,
        })
    }
}

/// MRC combiner `F`: column k is `a_k / |a_k|` with `a_k = H_u^H Theta Phi h_{u,k}`.
/// A vanishing `a_k` falls back to the first standard basis vector.
pub fn combiner(channels: &ChannelSet, theta: &[f64], phase_noise: &[f64]) -> Result<CMat> {
    Ok(mrc(&Cascade::new(channels, theta, phase_noise)?.bs_rx, channels.h_u_bs.cols()))
}

fn mrc(bs_rx: &[Vec<C64>], nr: usize) -> CMat {
    let mut f = CMat::zeros(nr, bs_rx.len());
    for (k, a) in bs_rx.iter().enumerate() {
        let norm = norm_sqr(a).sqrt();
        if norm > 0.0 && norm.is_finite() {
            for (n, &v) in a.iter().enumerate() {
                f[(n, k)] = v / norm;
            }
        } else {
            f[(0, k)] = C64::new(1.0, 0.0);
        }
    }
    f
}

/// Per-link SINRs, rates and secrecy rates in bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub sinr_b: Vec<f64>,
    pub sinr_s: Vec<f64>,
    /// Indexed `[k][l]`.
    pub sinr_e_down: Vec<Vec<f64>>,
    /// Indexed `[k][l]`.
    pub sinr_e_up: Vec<Vec<f64>>,
    pub rate_b: Vec<f64>,
    pub rate_s: Vec<f64>,
    /// Both-direction leakage rate, indexed `[k][l]`.
    pub rate_e: Vec<Vec<f64>>,
    pub secrecy: Vec<f64>,
    pub ssr: f64,
}

impl LinkBudget {
    pub fn sum_rate_b(&self) -> f64 {
        self.rate_b.iter().sum()
    }

    pub fn sum_rate_s(&self) -> f64 {
        self.rate_s.iter().sum()
    }

    /// `sum_k max_l R_{k,l}^E`.
    pub fn sum_worst_eve_rate(&self) -> f64 {
        self.rate_e.iter().map(|r| max_of(r)).sum()
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `[R_B + R_S - max_l R_E]^+`.
pub fn secrecy_rate(rate_b: f64, rate_s: f64, rate_e: &[f64]) -> f64 {
    (rate_b + rate_s - max_of(rate_e)).max(0.0)
}

pub fn ssr(secrecy: &[f64]) -> f64 {
    secrecy.iter().sum()
}

fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Evaluates every closed-form term for one (channels, action) pair.
pub struct LinkEvaluator<'a> {
    cascade: Cascade,
    w: &'a CMat,
    params: &'a SystemParams,
    antenna_power: Vec<f64>,
    combiner: CMat,
}

impl<'a> LinkEvaluator<'a> {
    pub fn new(channels: &ChannelSet, action: &'a Action, params: &'a SystemParams) -> Result<Self> {
        Self::with_phase_noise(channels, action, &channels.phase_noise, params)
    }

    pub fn with_phase_noise(
        channels: &ChannelSet,
        action: &'a Action,
        phase_noise: &[f64],
        params: &'a SystemParams,
    ) -> Result<Self> {
        let sizes = channels.sizes();
        if action.w.shape() != (sizes.nt, sizes.k) {
            return Err(Error::DimensionMismatch {
                op: "precoder",
                left: action.w.shape(),
                right: (sizes.nt, sizes.k),
            });
        }
        if params.user_powers.len() != sizes.k {
            return Err(Error::LengthMismatch {
                what: "user powers",
                expected: sizes.k,
                found: params.user_powers.len(),
            });
        }
        let cascade = Cascade::new(channels, &action.theta, phase_noise)?;
        let w = &action.w;
        let antenna_power = (0..w.rows()).map(|n| norm_sqr(w.row(n))).collect();
        let combiner = mrc(&cascade.bs_rx, sizes.nr);
        Ok(LinkEvaluator {
            cascade,
            w,
            params,
            antenna_power,
            combiner,
        })
    }

    pub fn cascade(&self) -> &Cascade {
        &self.cascade
    }

    pub fn combiner(&self) -> &CMat {
        &self.combiner
    }

    fn users(&self) -> usize {
        self.w.cols()
    }

    /// `|row . w_i|^2`.
    fn beam_gain(&self, row: &[C64], i: usize) -> f64 {
        (0..row.len()).map(|n| row[n] * self.w[(n, i)]).sum::<C64>().norm_sqr()
    }

    /// `kappa_d^S row diag(sum_i w_i w_i^H) row^H`.
    fn bs_tx_distortion(&self, row: &[C64]) -> f64 {
        let s: f64 = row.iter().zip(&self.antenna_power).map(|(r, p)| r.norm_sqr() * p).sum();
        self.params.hwi.kappa_tx_bs * s
    }

    pub fn desired_b(&self, k: usize) -> f64 {
        self.beam_gain(&self.cascade.user_rx[k], k)
    }

    /// Interference plus noise at user k before receiver distortion.
    pub fn gamma_b(&self, k: usize) -> f64 {
        let row = &self.cascade.user_rx[k];
        let hwi = &self.params.hwi;
        let mui: f64 = (0..self.users()).filter(|&i| i != k).map(|i| self.beam_gain(row, i)).sum();
        let uplink: f64 = (0..self.users())
            .map(|i| {
                let rho = if i == k { hwi.rho_si } else { 1.0 };
                (1.0 + hwi.kappa_tx_user[i]) * rho * self.params.user_powers[i] * self.cascade.user_user[k][i].norm_sqr()
            })
            .sum();
        mui + self.bs_tx_distortion(row) + self.params.noise.sigma_d2 + uplink
    }

    pub fn sinr_b(&self, k: usize) -> f64 {
        let d = self.desired_b(k);
        let g = self.gamma_b(k);
        d / (g + self.params.hwi.kappa_rx_user[k] * (d + g))
    }

    fn combined_gain(&self, k: usize, i: usize) -> f64 {
        let f = self.combiner.col(k);
        inner(&f, &self.cascade.bs_rx[i]).norm_sqr()
    }

    /// Interference plus noise on the combined uplink stream of user k.
    pub fn gamma_s(&self, k: usize) -> f64 {
        let p = &self.params.user_powers;
        let kappa = &self.params.hwi.kappa_tx_user;
        let f_norm = norm_sqr(&self.combiner.col(k));
        (0..self.users())
            .map(|i| {
                let g = p[i] * self.combined_gain(k, i);
                let mui = if i != k { g } else { 0.0 };
                mui + kappa[i] * g
            })
            .sum::<f64>()
            + f_norm * self.params.noise.delta_u2
    }

    /// `kappa_u^S f_k^H diag(E{y y^H}) f_k` at the BS.
    pub fn bs_rx_distortion(&self, k: usize) -> f64 {
        let p = &self.params.user_powers;
        let kappa = &self.params.hwi.kappa_tx_user;
        let f = self.combiner.col(k);
        let s: f64 = f
            .iter()
            .enumerate()
            .map(|(n, fnk)| {
                let diag: f64 = (0..self.users())
                    .map(|i| (1.0 + kappa[i]) * p[i] * self.cascade.bs_rx[i][n].norm_sqr())
                    .sum::<f64>()
                    + self.params.noise.delta_u2;
                fnk.norm_sqr() * diag
            })
            .sum();
        self.params.hwi.kappa_rx_bs * s
    }

    pub fn desired_s(&self, k: usize) -> f64 {
        self.params.user_powers[k] * self.combined_gain(k, k)
    }

    pub fn sinr_s(&self, k: usize) -> f64 {
        self.desired_s(k) / (self.gamma_s(k) + self.bs_rx_distortion(k))
    }

    /// Uplink leakage terms common to both eavesdropper directions:
    /// `sum_i (include_i + kappa_i) P_i |q_{l,i}|^2`.
    fn eve_uplink_part(&self, k: usize, l: usize, include_k: bool) -> f64 {
        let p = &self.params.user_powers;
        let kappa = &self.params.hwi.kappa_tx_user;
        (0..self.users())
            .map(|i| {
                let g = p[i] * self.cascade.eve_user[l][i].norm_sqr();
                let own = if i != k || include_k { g } else { 0.0 };
                own + kappa[i] * g
            })
            .sum()
    }

    fn eve_downlink_part(&self, k: usize, l: usize, include_k: bool) -> f64 {
        let row = &self.cascade.eve_rx[l];
        let beams: f64 = (0..self.users())
            .filter(|&i| i != k || include_k)
            .map(|i| self.beam_gain(row, i))
            .sum();
        beams + self.bs_tx_distortion(row)
    }

    /// Interference at eavesdropper l while decoding user k's downlink stream.
    pub fn gamma_e_down(&self, k: usize, l: usize) -> f64 {
        self.eve_uplink_part(k, l, true) + self.eve_downlink_part(k, l, false)
    }

    /// Interference at eavesdropper l while decoding user k's uplink stream.
    pub fn gamma_e_up(&self, k: usize, l: usize) -> f64 {
        self.eve_uplink_part(k, l, false) + self.eve_downlink_part(k, l, true)
    }

    /// `(downlink, uplink)` SINR of eavesdropper l on user k.
    pub fn sinr_e(&self, k: usize, l: usize) -> (f64, f64) {
        let noise = &self.params.noise;
        let down = self.beam_gain(&self.cascade.eve_rx[l], k) / (self.gamma_e_down(k, l) + noise.mu_d2);
        let up = self.params.user_powers[k] * self.cascade.eve_user[l][k].norm_sqr() / (self.gamma_e_up(k, l) + noise.mu_u2);
        (down, up)
    }

    pub fn budget(&self) -> LinkBudget {
        let k_users = self.users();
        let l_eves = self.cascade.eve_rx.len();
        let sinr_b: Vec<f64> = (0..k_users).map(|k| self.sinr_b(k)).collect();
        let sinr_s: Vec<f64> = (0..k_users).map(|k| self.sinr_s(k)).collect();
        let mut sinr_e_down = Vec::with_capacity(k_users);
        let mut sinr_e_up = Vec::with_capacity(k_users);
        for k in 0..k_users {
            let (d, u): (Vec<f64>, Vec<f64>) = (0..l_eves).map(|l| self.sinr_e(k, l)).unzip();
            sinr_e_down.push(d);
            sinr_e_up.push(u);
        }
        let rate_b: Vec<f64> = sinr_b.iter().map(|&s| rate(s)).collect();
        let rate_s: Vec<f64> = sinr_s.iter().map(|&s| rate(s)).collect();
        let rate_e: Vec<Vec<f64>> = sinr_e_down
            .iter()
            .zip(&sinr_e_up)
            .map(|(d, u)| d.iter().zip(u).map(|(&a, &b)| rate(a) + rate(b)).collect())
            .collect();
        let secrecy: Vec<f64> = (0..k_users).map(|k| secrecy_rate(rate_b[k], rate_s[k], &rate_e[k])).collect();
        let total = ssr(&secrecy);
        LinkBudget {
            sinr_b,
            sinr_s,
            sinr_e_down,
            sinr_e_up,
            rate_b,
            rate_s,
            rate_e,
            secrecy,
            ssr: total,
        }
    }

    /// `G_1d = h_d^H Theta Phi H_d W`, `K x K`.
    pub fn user_effective(&self) -> CMat {
        self.effective(&self.cascade.user_rx)
    }

    /// `G_2d = g_d^H Theta Phi H_d W`, `L x K`.
    pub fn eve_effective(&self) -> CMat {
        self.effective(&self.cascade.eve_rx)
    }

    fn effective(&self, rows: &[Vec<C64>]) -> CMat {
        CMat::from_fn(rows.len(), self.users(), |r, i| dot(&rows[r], &self.w.col(i)))
    }
}

/// Convenience wrapper: full budget with the channel set's own phase noise.
pub fn evaluate(channels: &ChannelSet, action: &Action, params: &SystemParams) -> Result<LinkBudget> {
    Ok(LinkEvaluator::new(channels, action, params)?.budget())
}
