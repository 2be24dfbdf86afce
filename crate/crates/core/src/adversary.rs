//! Intercept-resend eavesdroppers.
//!
//! Eve sits between Alice and the channel, measures every photon with one of
//! Bob's instruments (or ignores it and replays a fixed state), and sends a
//! fresh photon consistent with what she saw. Her measurement is ideal and her
//! resend perfectly synchronized, which is the strongest version of each
//! strategy.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::measurement::{click_probability, sample_click_time, Prefactors};
use crate::states::{Carrier, CarrierFactory, FrequencyBasis, FrequencyQubit};

/// State replayed by [`AttackStrategy::BlindResend`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResendState {
    Zero,
    One,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttackStrategy {
    #[default]
    None,
    /// Measure `{E0, E1}` and resend the basis state found.
    InterceptFreq,
    /// Measure the click time and resend the equal-weight state peaking at that time.
    InterceptTime,
    /// Replace every photon with a fixed state.
    BlindResend(ResendState),
}

impl AttackStrategy {
    pub fn is_active(&self) -> bool {
        !matches!(self, AttackStrategy::None)
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttackStrategy::None => "none",
            AttackStrategy::InterceptFreq => "intercept-freq",
            AttackStrategy::InterceptTime => "intercept-time",
            AttackStrategy::BlindResend(ResendState::Zero) => "blind-resend-zero",
            AttackStrategy::BlindResend(ResendState::One) => "blind-resend-one",
            AttackStrategy::BlindResend(ResendState::Control) => "blind-resend-control",
        }
    }

    pub const ALL: [AttackStrategy; 6] = [
        AttackStrategy::None,
        AttackStrategy::InterceptFreq,
        AttackStrategy::InterceptTime,
        AttackStrategy::BlindResend(ResendState::Zero),
        AttackStrategy::BlindResend(ResendState::One),
        AttackStrategy::BlindResend(ResendState::Control),
    ];
}

impl fmt::Display for AttackStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown attack strategy `{s}`")))
    }
}

/// What Eve did to one photon, for the transcript.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackAction {
    Passed,
    MeasuredFrequency(u8),
    MeasuredTime(f64),
    Replaced,
}

impl AttackAction {
    pub fn tag(&self) -> String {
        match self {
            AttackAction::Passed => "none".to_string(),
            AttackAction::MeasuredFrequency(k) => format!("freq:{k}"),
            AttackAction::MeasuredTime(_) => "time".to_string(),
            AttackAction::Replaced => "replace".to_string(),
        }
    }
}

/// `intercept_freq` on the monochromatic carrier.
pub fn intercept_freq<R: Rng + ?Sized>(state: &FrequencyQubit, rng: &mut R) -> FrequencyQubit {
    let p0 = state.prepared()[0].norm_sqr();
    let bit = u8::from(rng.random::<f64>() >= p0);
    basis_state_at(bit, state.t0(), state.basis())
}

fn basis_state_at(bit: u8, t0: f64, basis: FrequencyBasis) -> FrequencyQubit {
    let mut amps = [Complex64::new(0.0, 0.0); 2];
    amps[usize::from(bit)] = Complex64::new(1.0, 0.0);
    // cannot fail: amplitudes are a unit vector
    FrequencyQubit::control(amps[0], amps[1], t0, basis).expect("unit vector")
}

/// Equal-weight amplitudes whose beat pattern peaks at `offset` after emission.
fn peaked_amplitudes(basis: &FrequencyBasis, offset: f64) -> [Complex64; 2] {
    let phase = crate::states::phase_mod(basis.splitting(), offset);
    [
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        Complex64::from_polar(FRAC_1_SQRT_2, phase),
    ]
}

/// `intercept_time` on the monochromatic carrier.
pub fn intercept_time<R: Rng + ?Sized>(state: &FrequencyQubit, rng: &mut R) -> FrequencyQubit {
    let tau = sample_click_time(&Carrier::Mono(*state), Prefactors::Off, rng);
    let [a, b] = peaked_amplitudes(&state.basis(), tau - state.t0());
    FrequencyQubit::control(a, b, state.t0(), state.basis()).expect("unit vector")
}

/// An eavesdropper following one strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eve {
    pub strategy: AttackStrategy,
    factory: CarrierFactory,
}

impl Eve {
    pub fn new(strategy: AttackStrategy, factory: CarrierFactory) -> Self {
        Self { strategy, factory }
    }

    /// Apply the strategy to one photon in either carrier model.
    pub fn intercept<R: Rng + ?Sized>(&self, carrier: &Carrier, rng: &mut R) -> Result<(Carrier, AttackAction)> {
        let t0 = carrier.t0();
        match self.strategy {
            AttackStrategy::None => Ok((carrier.clone(), AttackAction::Passed)),
            AttackStrategy::InterceptFreq => {
                let p0 = click_probability(carrier, &self.factory.basis, 0);
                let bit = u8::from(rng.random::<f64>() >= p0);
                Ok((self.factory.info(bit, t0)?, AttackAction::MeasuredFrequency(bit)))
            }
            AttackStrategy::InterceptTime => {
                let tau = sample_click_time(carrier, Prefactors::Off, rng);
                let amps = peaked_amplitudes(&self.factory.basis, tau - t0);
                Ok((self.factory.superposition(amps, t0)?, AttackAction::MeasuredTime(tau)))
            }
            AttackStrategy::BlindResend(which) => {
                let c = match which {
                    ResendState::Zero => self.factory.info(0, t0)?,
                    ResendState::One => self.factory.info(1, t0)?,
                    ResendState::Control => self.factory.control(t0)?,
                };
                Ok((c, AttackAction::Replaced))
            }
        }
    }
}
