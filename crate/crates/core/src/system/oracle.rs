//! Monte Carlo estimate of received powers and SINRs.
//!
//! Draws unit-power symbols and Gaussian distortion noises, forms the
//! received signals term by term, and averages powers. Effective channels
//! are rebuilt here from plain matrix products so the estimate shares no
//! code path with [`LinkEvaluator`](super::LinkEvaluator).
//!
//! Receiver distortion variances are proportional to the power of the
//! undistorted signal, which is itself estimated. The sampler therefore
//! runs twice over an identical symbol stream: the first pass measures
//! those powers, the second adds distortion and accumulates.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};

use super::{build_theta, combiner, Action, SystemParams};
use crate::channel::{phase_noise_matrix, ChannelSet};
use crate::error::{invalid, Result};
use crate::numerics::{hermitian, CMat, C64};
use crate::rng::complex_gaussian;

/// Averaged powers per receiver. User and BS entries are indexed by user;
/// eavesdropper entries are `[k][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimate {
    pub draws: usize,
    pub desired_b: Vec<f64>,
    pub interference_b: Vec<f64>,
    /// Power contributed at user k by the BS transmit distortion alone.
    pub bs_distortion_b: Vec<f64>,
    pub desired_s: Vec<f64>,
    pub interference_s: Vec<f64>,
    pub desired_e_down: Vec<Vec<f64>>,
    pub interference_e_down: Vec<Vec<f64>>,
    pub desired_e_up: Vec<Vec<f64>>,
    pub interference_e_up: Vec<Vec<f64>>,
}

fn ratio(d: &[f64], i: &[f64]) -> Vec<f64> {
    d.iter().zip(i).map(|(a, b)| a / b).collect()
}

impl OracleEstimate {
    pub fn sinr_b(&self) -> Vec<f64> {
        ratio(&self.desired_b, &self.interference_b)
    }

    pub fn sinr_s(&self) -> Vec<f64> {
        ratio(&self.desired_s, &self.interference_s)
    }

    pub fn sinr_e_down(&self) -> Vec<Vec<f64>> {
        self.desired_e_down.iter().zip(&self.interference_e_down).map(|(d, i)| ratio(d, i)).collect()
    }

    pub fn sinr_e_up(&self) -> Vec<Vec<f64>> {
        self.desired_e_up.iter().zip(&self.interference_e_up).map(|(d, i)| ratio(d, i)).collect()
    }
}

fn row_times(row: &CMat, x: &[C64]) -> C64 {
    row.as_slice().iter().zip(x).map(|(a, b)| a * b).sum()
}

struct Links {
    /// `h_{d,k}^H Theta Phi H_d`, `1 x Nt`.
    user_rx: Vec<CMat>,
    eve_rx: Vec<CMat>,
    /// `H_u^H Theta Phi h_{u,i}`, `Nr x 1`.
    bs_rx: Vec<CMat>,
    user_user: Vec<Vec<C64>>,
    eve_user: Vec<Vec<C64>>,
    /// Combining vectors, conjugated, `1 x Nr`.
    f_h: Vec<CMat>,
}

fn links(channels: &ChannelSet, action: &Action) -> Result<Links> {
    let reflect = build_theta(&action.theta).matmul(&phase_noise_matrix(&channels.phase_noise))?;
    let scalar = |x: &CMat, y: &CMat| -> Result<C64> { Ok(hermitian(x).matmul(&reflect)?.matmul(y)?[(0, 0)]) };
    let mut user_rx = Vec::new();
    for h in &channels.h_d {
        user_rx.push(hermitian(h).matmul(&reflect)?.matmul(&channels.h_d_bs)?);
    }
    let mut eve_rx = Vec::new();
    for g in &channels.g_d {
        eve_rx.push(hermitian(g).matmul(&reflect)?.matmul(&channels.h_d_bs)?);
    }
    let bs_side = hermitian(&channels.h_u_bs).matmul(&reflect)?;
    let mut bs_rx = Vec::new();
    for h in &channels.h_u {
        bs_rx.push(bs_side.matmul(h)?);
    }
    let mut user_user = Vec::new();
    for hd in &channels.h_d {
        user_user.push(channels.h_u.iter().map(|hu| scalar(hd, hu)).collect::<Result<Vec<_>>>()?);
    }
    let mut eve_user = Vec::new();
    for g in &channels.g_u {
        eve_user.push(channels.h_u.iter().map(|hu| scalar(g, hu)).collect::<Result<Vec<_>>>()?);
    }
    let f = combiner(channels, &action.theta, &channels.phase_noise)?;
    let f_h = (0..f.cols()).map(|k| hermitian(&CMat::column(f.col(k)))).collect();
    Ok(Links {
        user_rx,
        eve_rx,
        bs_rx,
        user_user,
        eve_user,
        f_h,
    })
}

/// One draw of every transmit-side random quantity.
struct Draw {
    s_d: Vec<C64>,
    /// `sqrt(P_i) (s_hat_i + eta_i)`, what user i puts on the air.
    x_u: Vec<C64>,
    /// `sqrt(P_i) s_hat_i`, the information part only.
    x_u_info: Vec<C64>,
    eta_bs: Vec<C64>,
    /// `W s_d + eta_bs`.
    x_d: Vec<C64>,
    m_user: Vec<C64>,
    n_eve_d: Vec<C64>,
    n_eve_u: Vec<C64>,
}

fn draw<R: Rng>(rng: &mut R, action: &Action, params: &SystemParams, antenna_power: &[f64], l: usize) -> Draw {
    let hwi = &params.hwi;
    let noise = &params.noise;
    let k = params.user_powers.len();
    let s_d: Vec<C64> = (0..k).map(|_| complex_gaussian(rng, 1.0)).collect();
    let mut x_u = Vec::with_capacity(k);
    let mut x_u_info = Vec::with_capacity(k);
    for i in 0..k {
        let amp = params.user_powers[i].sqrt();
        let s = complex_gaussian(rng, 1.0);
        let eta = complex_gaussian(rng, hwi.kappa_tx_user[i]);
        x_u.push((s + eta) * amp);
        x_u_info.push(s * amp);
    }
    let eta_bs: Vec<C64> = antenna_power.iter().map(|&p| complex_gaussian(rng, hwi.kappa_tx_bs * p)).collect();
    let x_d = (0..action.w.rows())
        .map(|n| (0..k).map(|i| action.w[(n, i)] * s_d[i]).sum::<C64>() + eta_bs[n])
        .collect();
    Draw {
        s_d,
        x_u,
        x_u_info,
        eta_bs,
        x_d,
        m_user: (0..k).map(|_| complex_gaussian(rng, noise.sigma_d2)).collect(),
        n_eve_d: (0..l).map(|_| complex_gaussian(rng, noise.mu_d2)).collect(),
        n_eve_u: (0..l).map(|_| complex_gaussian(rng, noise.mu_u2)).collect(),
    }
}

/// Estimates all received powers with `draws` symbol draws.
pub fn estimate<R: Rng>(
    rng: &mut R,
    channels: &ChannelSet,
    action: &Action,
    params: &SystemParams,
    draws: usize,
) -> Result<OracleEstimate> {
    if draws == 0 {
        return Err(invalid("draw count", 0));
    }
    params.validate()?;
    let sizes = channels.sizes();
    let (k_users, l_eves, nr) = (sizes.k, sizes.l, sizes.nr);
    let lk = links(channels, action)?;
    let w = &action.w;
    let antenna_power: Vec<f64> = (0..w.rows()).map(|n| (0..w.cols()).map(|i| w[(n, i)].norm_sqr()).sum()).collect();
    let rho = |k: usize, i: usize| if i == k { params.hwi.rho_si } else { 1.0 };

    let user_clean = |d: &Draw, k: usize| -> C64 {
        let uplink: C64 = (0..k_users).map(|i| lk.user_user[k][i] * d.x_u[i] * rho(k, i).sqrt()).sum();
        row_times(&lk.user_rx[k], &d.x_d) + uplink + d.m_user[k]
    };
    let bs_clean = |d: &Draw, bs_noise: &[C64]| -> Vec<C64> {
        (0..nr)
            .map(|n| (0..k_users).map(|i| lk.bs_rx[i][(n, 0)] * d.x_u[i]).sum::<C64>() + bs_noise[n])
            .collect()
    };

    let stream_seed: u64 = rng.random();
    let distortion_seed: u64 = rng.random();
    let bs_noise_draw = |r: &mut crate::rng::Rng| -> Vec<C64> {
        (0..nr).map(|_| complex_gaussian(r, params.noise.delta_u2)).collect()
    };

    // pass 1: powers of the undistorted receive signals
    let mut user_power = vec![0.0; k_users];
    let mut bs_power = vec![0.0; nr];
    let mut r = crate::rng::Rng::seed_from_u64(stream_seed);
    for _ in 0..draws {
        let d = draw(&mut r, action, params, &antenna_power, l_eves);
        let bs_noise = bs_noise_draw(&mut r);
        for (k, acc) in user_power.iter_mut().enumerate() {
            *acc += user_clean(&d, k).norm_sqr();
        }
        for (n, y) in bs_clean(&d, &bs_noise).iter().enumerate() {
            bs_power[n] += y.norm_sqr();
        }
    }
    let n = draws as f64;
    let user_dist_var: Vec<f64> = user_power
        .iter()
        .zip(&params.hwi.kappa_rx_user)
        .map(|(p, kappa)| kappa * p / n)
        .collect();
    let bs_dist_var: Vec<f64> = bs_power.iter().map(|p| params.hwi.kappa_rx_bs * p / n).collect();

    // pass 2: same stream, now with receiver distortion
    let mut out = OracleEstimate {
        draws,
        desired_b: vec![0.0; k_users],
        interference_b: vec![0.0; k_users],
        bs_distortion_b: vec![0.0; k_users],
        desired_s: vec![0.0; k_users],
        interference_s: vec![0.0; k_users],
        desired_e_down: vec![vec![0.0; l_eves]; k_users],
        interference_e_down: vec![vec![0.0; l_eves]; k_users],
        desired_e_up: vec![vec![0.0; l_eves]; k_users],
        interference_e_up: vec![vec![0.0; l_eves]; k_users],
    };
    let mut r = crate::rng::Rng::seed_from_u64(stream_seed);
    let mut rd = crate::rng::Rng::seed_from_u64(distortion_seed);
    for _ in 0..draws {
        let d = draw(&mut r, action, params, &antenna_power, l_eves);
        let bs_noise = bs_noise_draw(&mut r);
        for k in 0..k_users {
            let y = user_clean(&d, k) + complex_gaussian(&mut rd, user_dist_var[k]);
            let desired = (0..w.rows()).map(|nt| lk.user_rx[k][(0, nt)] * w[(nt, k)]).sum::<C64>() * d.s_d[k];
            out.desired_b[k] += desired.norm_sqr();
            out.interference_b[k] += (y - desired).norm_sqr();
            out.bs_distortion_b[k] += row_times(&lk.user_rx[k], &d.eta_bs).norm_sqr();
        }
        let y_bs: Vec<C64> = bs_clean(&d, &bs_noise)
            .into_iter()
            .zip(&bs_dist_var)
            .map(|(y, &v)| y + complex_gaussian(&mut rd, v))
            .collect();
        for k in 0..k_users {
            let y = row_times(&lk.f_h[k], &y_bs);
            let desired = row_times(&lk.f_h[k], lk.bs_rx[k].as_slice()) * d.x_u_info[k];
            out.desired_s[k] += desired.norm_sqr();
            out.interference_s[k] += (y - desired).norm_sqr();
        }
        for l in 0..l_eves {
            let uplink: C64 = (0..k_users).map(|i| lk.eve_user[l][i] * d.x_u[i]).sum();
            let common = uplink + row_times(&lk.eve_rx[l], &d.x_d);
            for k in 0..k_users {
                let want_d = (0..w.rows()).map(|nt| lk.eve_rx[l][(0, nt)] * w[(nt, k)]).sum::<C64>() * d.s_d[k];
                let y_d = common + d.n_eve_d[l];
                out.desired_e_down[k][l] += want_d.norm_sqr();
                out.interference_e_down[k][l] += (y_d - want_d).norm_sqr();
                let want_u = lk.eve_user[l][k] * d.x_u_info[k];
                let y_u = common + d.n_eve_u[l];
                out.desired_e_up[k][l] += want_u.norm_sqr();
                out.interference_e_up[k][l] += (y_u - want_u).norm_sqr();
            }
        }
    }
    let scale = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x /= n);
    scale(&mut out.desired_b);
    scale(&mut out.interference_b);
    scale(&mut out.bs_distortion_b);
    scale(&mut out.desired_s);
    scale(&mut out.interference_s);
    for v in out
        .desired_e_down
        .iter_mut()
        .chain(out.interference_e_down.iter_mut())
        .chain(out.desired_e_up.iter_mut())
        .chain(out.interference_e_up.iter_mut())
    {
        scale(v);
    }
    Ok(out)
}
