//! Scenario geometry and one-shot channel realizations.
//!
//! All signals travel over cascaded links through the RIS; there are no
//! direct BS-user or BS-eavesdropper paths. Each link is Rician with a
//! rank-one ULA line-of-sight component and a distance-dependent gain.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};

use crate::error::{invalid, Result};
use crate::numerics::{CMat, C64};
use crate::rng::{self, complex_gaussian};

pub type Point = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub bs: Point,
    pub ris: Point,
    pub users: Vec<Point>,
    pub eves: Vec<Point>,
}

impl Geometry {
    pub const BS: Point = (0.0, 0.0);
    pub const RIS: Point = (20.0, 100.0);
    /// Placement square for users and eavesdroppers: x range then y range.
    pub const AREA: ((f64, f64), (f64, f64)) = ((100.0, 200.0), (0.0, 100.0));

    /// BS and RIS at their fixed sites; `users` and `eves` nodes dropped
    /// uniformly in [`Geometry::AREA`].
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, users: usize, eves: usize) -> Self {
        let ((x0, x1), (y0, y1)) = Self::AREA;
        let mut drop = || (rng.random_range(x0..=x1), rng.random_range(y0..=y1));
        let users = (0..users).map(|_| drop()).collect();
        let eves = (0..eves).map(|_| drop()).collect();
        Geometry {
            bs: Self::BS,
            ris: Self::RIS,
            users,
            eves,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.users.is_empty() || self.eves.is_empty() {
            return Err(invalid("geometry", "need at least one user and one eavesdropper"));
        }
        if distance(self.bs, self.ris) <= 0.0 {
            return Err(invalid("geometry", "BS and RIS coincide"));
        }
        if self.users.iter().chain(&self.eves).any(|&p| distance(p, self.ris) <= 0.0) {
            return Err(invalid("geometry", "a node sits on the RIS"));
        }
        Ok(())
    }
}

pub fn distance(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub path_loss_exponent: f64,
    /// Path loss at the 1 m reference distance, dB.
    pub pl0_db: f64,
    pub rician_factor: f64,
    /// Element spacing over carrier wavelength.
    pub spacing: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            path_loss_exponent: 2.0,
            pl0_db: -30.0,
            rician_factor: 10.0,
            spacing: 0.5,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.path_loss_exponent >= 0.0) {
            return Err(invalid("path loss exponent", self.path_loss_exponent));
        }
        if !(self.rician_factor >= 0.0) {
            return Err(invalid("Rician factor", self.rician_factor));
        }
        if !(self.spacing > 0.0) {
            return Err(invalid("element spacing", self.spacing));
        }
        Ok(())
    }
}

/// Array and population sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sizes {
    /// RIS elements.
    pub m: usize,
    pub nt: usize,
    pub nr: usize,
    /// Legitimate users.
    pub k: usize,
    /// Eavesdroppers.
    pub l: usize,
}

impl Default for Sizes {
    fn default() -> Self {
        Sizes {
            m: 8,
            nt: 4,
            nr: 4,
            k: 2,
            l: 2,
        }
    }
}

impl Sizes {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.nt == 0 || self.nr == 0 || self.k == 0 || self.l == 0 {
            return Err(invalid("sizes", "all counts must be at least 1"));
        }
        Ok(())
    }
}

/// One realization of every reflect link plus the current RIS phase noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS -> RIS, `M x Nt`.
    pub h_d_bs: CMat,
    /// BS <- RIS, `M x Nr`.
    pub h_u_bs: CMat,
    /// RIS -> user k, each `M x 1`.
    pub h_d: Vec<CMat>,
    /// user k -> RIS, each `M x 1`.
    pub h_u: Vec<CMat>,
    /// RIS -> eavesdropper l (downlink leakage), each `M x 1`.
    pub g_d: Vec<CMat>,
    /// RIS -> eavesdropper l (uplink leakage), each `M x 1`.
    pub g_u: Vec<CMat>,
    /// Per-element phase error in radians, within [-pi/2, pi/2].
    pub phase_noise: Vec<f64>,
}

impl ChannelSet {
    pub fn sizes(&self) -> Sizes {
        Sizes {
            m: self.h_d_bs.rows(),
            nt: self.h_d_bs.cols(),
            nr: self.h_u_bs.cols(),
            k: self.h_d.len(),
            l: self.g_d.len(),
        }
    }

    /// Checks every shape against `sizes`.
    pub fn validate(&self) -> Result<()> {
        let s = self.sizes();
        let vec_ok = |v: &[CMat], n: usize| v.len() == n && v.iter().all(|h| h.shape() == (s.m, 1));
        if self.h_u_bs.rows() != s.m
            || !vec_ok(&self.h_d, s.k)
            || !vec_ok(&self.h_u, s.k)
            || !vec_ok(&self.g_d, s.l)
            || !vec_ok(&self.g_u, s.l)
            || self.phase_noise.len() != s.m
        {
            return Err(invalid("channel set", "inconsistent shapes"));
        }
        Ok(())
    }
}

/// Large-scale power gain `10^((PL0 - 10 a log10 d) / 10)`.
pub fn path_loss_linear(d: f64, params: &ChannelParams) -> Result<f64> {
    if !(d > 0.0) {
        return Err(invalid("distance", d));
    }
    let db = params.pl0_db - 10.0 * params.path_loss_exponent * d.log10();
    Ok(10f64.powf(db / 10.0))
}

/// ULA response `[1, e^{j 2 pi s sin a}, ..., e^{j 2 pi s (W-1) sin a}]^T`.
pub fn steering(count: usize, angle: f64, spacing: f64) -> CMat {
    let step = 2.0 * PI * spacing * angle.sin();
    CMat::column((0..count).map(|w| C64::from_polar(1.0, step * w as f64)).collect())
}

/// Rank-one LoS matrix `a_r(aoa) a_t(aod)^H`.
pub fn los_component(rx: usize, tx: usize, aoa: f64, aod: f64, spacing: f64) -> CMat {
    let ar = steering(rx, aoa, spacing);
    let at = steering(tx, aod, spacing);
    CMat::from_fn(rx, tx, |i, j| ar[(i, 0)] * at[(j, 0)].conj())
}

/// Link geometry and fading parameters for one Rician draw.
#[derive(Debug, Clone, Copy)]
pub struct RicianLink {
    pub rows: usize,
    pub cols: usize,
    pub gain: f64,
    pub rician_factor: f64,
    pub aoa: f64,
    pub aod: f64,
    pub spacing: f64,
}

/// `sqrt(g) (sqrt(e/(e+1)) LoS + sqrt(1/(e+1)) NLoS)` with unit-variance
/// CN(0, 1) scattering.
pub fn sample_rician<R: Rng + ?Sized>(rng: &mut R, link: &RicianLink) -> CMat {
    let e = link.rician_factor;
    let los_w = (e / (e + 1.0)).sqrt();
    let nlos_w = (1.0 / (e + 1.0)).sqrt();
    let amp = link.gain.sqrt();
    let los = los_component(link.rows, link.cols, link.aoa, link.aod, link.spacing);
    CMat::from_fn(link.rows, link.cols, |i, j| {
        amp * (los[(i, j)] * los_w + complex_gaussian(rng, 1.0) * nlos_w)
    })
}

/// I.i.d. uniform phase errors on [-pi/2, pi/2].
pub fn sample_phase_noise<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(-FRAC_PI_2..=FRAC_PI_2)).collect()
}

/// `diag(e^{j dtheta_m})`.
pub fn phase_noise_matrix(noise: &[f64]) -> CMat {
    let d: Vec<C64> = noise.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    CMat::diag(&d)
}

/// Draws all six channel groups and a fresh phase-noise vector.
///
/// Each link gets its own generator seeded from `rng`, so no two links
/// share a random substream. BS-RIS hops use the BS-RIS distance; the
/// remaining hops use the RIS-node distance.
pub fn sample_channel_set<R: Rng + ?Sized>(
    rng: &mut R,
    geometry: &Geometry,
    params: &ChannelParams,
    sizes: &Sizes,
) -> Result<ChannelSet> {
    sizes.validate()?;
    params.validate()?;
    geometry.validate()?;
    if geometry.users.len() != sizes.k || geometry.eves.len() != sizes.l {
        return Err(invalid("geometry", "node counts disagree with sizes"));
    }
    let mut link = |rows: usize, cols: usize, from: Point, to: Point| -> Result<CMat> {
        let mut sub = rng::Rng::seed_from_u64(rng.random());
        let gain = path_loss_linear(distance(from, to), params)?;
        let spec = RicianLink {
            rows,
            cols,
            gain,
            rician_factor: params.rician_factor,
            aoa: sub.random_range(-FRAC_PI_2..=FRAC_PI_2),
            aod: sub.random_range(-FRAC_PI_2..=FRAC_PI_2),
            spacing: params.spacing,
        };
        Ok(sample_rician(&mut sub, &spec))
    };
    let ris = geometry.ris;
    let h_d_bs = link(sizes.m, sizes.nt, geometry.bs, ris)?;
    let h_u_bs = link(sizes.m, sizes.nr, geometry.bs, ris)?;
    let h_d = geometry.users.iter().map(|&u| link(sizes.m, 1, ris, u)).collect::<Result<Vec<_>>>()?;
    let h_u = geometry.users.iter().map(|&u| link(sizes.m, 1, u, ris)).collect::<Result<Vec<_>>>()?;
    let g_d = geometry.eves.iter().map(|&e| link(sizes.m, 1, ris, e)).collect::<Result<Vec<_>>>()?;
    let g_u = geometry.eves.iter().map(|&e| link(sizes.m, 1, e, ris)).collect::<Result<Vec<_>>>()?;
    let phase_noise = sample_phase_noise(rng, sizes.m);
    Ok(ChannelSet {
        h_d_bs,
        h_u_bs,
        h_d,
        h_u,
        g_d,
        g_u,
        phase_noise,
    })
}
