//! Physical-layer simulation and actor-critic training for RIS-aided
//! full-duplex multiuser wiretap systems with transceiver and RIS hardware
//! impairments.
//!
//! The crate is `no_std` (with `alloc`). Enable the `std` feature to get
//! runtime CPU dispatch in the dense kernels and `std::error::Error` glue.
//!
//! Layout, bottom-up:
//!
//! - [`numerics`]: dense complex matrices.
//! - [`channel`]: geometry, Rician fading with ULA responses, RIS phase noise.
//! - [`system`]: power projection, combining, interference terms, SINRs,
//!   rates and the sum secrecy rate. [`system::oracle`] is an independent
//!   Monte Carlo check of the closed forms.
//! - [`neural`]: dense networks with reverse-mode gradients and Adam.
//! - [`env`]: the MDP wrapper (state layout, action decoding, whitening).
//! - [`agents`]: DDPG, TD3, baselines and the episode driver.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod agents;
pub mod channel;
pub mod env;
mod error;
pub mod neural;
pub mod numerics;
pub mod rng;
pub mod system;

pub use error::{Error, Result};
pub use numerics::{CMat, C64};
