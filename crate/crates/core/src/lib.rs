//! Simulator and analysis toolkit for quantum key distribution with
//! frequency-encoded single photons.
//!
//! Alice sends one of three single-photon states: two orthogonal information
//! states, each concentrated at one basis frequency, and a control state that
//! superposes both. Bob measures with a narrow-band filter at either frequency
//! or records the click time with a fast detector, where the control state
//! shows a beat pattern with period `T = 2 pi / |w1 - w0|`. Intercept-resend
//! attacks change those statistics and are caught by goodness-of-fit tests.
//!
//! Modules follow the data flow of a session:
//! [`source`] -> [`states`] -> [`adversary`] -> [`channel`] -> [`measurement`]
//! -> [`protocol`] -> [`stats`].

pub mod adversary;
pub mod channel;
pub mod error;
pub mod measurement;
pub mod par;
pub mod protocol;
pub mod quadrature;
pub mod rng;
pub mod source;
pub mod states;
pub mod stats;

pub use error::{Error, Result};
pub use par::Execution;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;
