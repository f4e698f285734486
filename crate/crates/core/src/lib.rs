//! Structural default models with collateral barriers.
//!
//! A firm's assets follow geometric Brownian motion. Depending on how the
//! firm is collateralized, default is checked only at the horizon (Merton),
//! continuously against a barrier (Black-Cox), or on a remargining schedule.
//! All of these share one closed-form survival formula ([`survival`]); the
//! remaining modules convert to and from credit spreads, calibrate the firm
//! value to a quote, verify the closed forms by simulation and run
//! collateralization sweeps.

pub mod calibration;
pub mod credit;
pub mod error;
pub mod mc;
pub mod model;
pub mod normal;
pub mod scenarios;
pub mod survival;

pub use error::{Error, Result};
pub use model::{BarrierSpec, Branch, CompositeBarrier, FirmParams, SurvivalResult, DAILY, MONTHLY, WEEKLY};
pub use normal::std_normal_cdf;
pub use survival::{alpha, barrier_shift, beta_constant, binary_call, composite_survival, survival_probability};
