//! Seeded random streams.
//!
//! Every run derives independent ChaCha streams from one `u64` seed so that
//! channel draws, phase noise, network initialization and exploration do
//! not perturb each other when one of them changes.

#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Named substreams of a run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Geometry = 1,
    Channel = 2,
    PhaseNoise = 3,
    NetworkInit = 4,
    Exploration = 5,
    Replay = 6,
    InitialAction = 7,
}

pub fn stream(seed: u64, which: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// A fresh generator seeded from `seed` on substream `index`.
pub fn indexed(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One draw of a circularly-symmetric complex Gaussian with the given
/// variance (total power, split evenly between the two quadratures).
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> crate::C64 {
    use rand_distr::StandardNormal;
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    crate::C64::new(s * re, s * im)
}
