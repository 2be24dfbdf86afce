//! Outcome probabilities, detection-time densities and the detector sampler.
//!
//! Bob either places a narrow-band filter at one of the basis frequencies in
//! front of the photodetector (`E0`, `E1`) or leaves both bands open and
//! records the click time in waiting mode (`E(dt)`). For the monochromatic
//! carrier the click-time density over one beat period is
//!
//! ```text
//! p(t) = { |f0|^2 + |f1|^2 + 2 Re[f0 f1* exp(-i (w0 - w1)(t - t0))] } / T
//! ```
//!
//! and for the Gaussian carrier it is the same fringe under a Gaussian
//! envelope of width `1 / (2 sigma)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::TabulatedCdf;
use crate::states::{Carrier, FrequencyBasis, FrequencyQubit, GaussianState, SpectralPacket};

/// Cells used when tabulating theoretical CDFs.
pub const CDF_CELLS: usize = 512;

/// Gaussian densities are supported on `center +- ENVELOPE_HALF_WIDTH / sigma`.
pub const ENVELOPE_HALF_WIDTH: f64 = 8.0;

/// Whether the `sqrt(w_k)` field prefactors enter the detection density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prefactors {
    #[default]
    Off,
    Exact,
}

/// Finite time resolution and waiting window of the photodetector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorTiming {
    pub tau_det: f64,
    pub window: f64,
}

impl DetectorTiming {
    pub fn new(tau_det: f64, window: f64) -> Result<Self> {
        if !(tau_det > 0.0 && tau_det.is_finite()) || !(tau_det <= window) {
            return Err(Error::InvalidConfig(format!(
                "detector needs 0 < tau_det <= window, got tau_det={tau_det:e}, window={window:e}"
            )));
        }
        Ok(Self { tau_det, window })
    }

    /// Snap `t` to the start of its resolution bin, bins counted from `origin`.
    pub fn quantize(&self, t: f64, origin: f64) -> f64 {
        origin + ((t - origin) / self.tau_det).floor() * self.tau_det
    }
}

/// Bob's measurement choice for one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasurementSetting {
    FreqE0,
    FreqE1,
    TimeOfArrival(DetectorTiming),
}

impl MeasurementSetting {
    /// Projector index for frequency settings.
    pub fn projector(&self) -> Option<u8> {
        match self {
            MeasurementSetting::FreqE0 => Some(0),
            MeasurementSetting::FreqE1 => Some(1),
            MeasurementSetting::TimeOfArrival(_) => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            MeasurementSetting::FreqE0 => "E0",
            MeasurementSetting::FreqE1 => "E1",
            MeasurementSetting::TimeOfArrival(_) => "Edt",
        }
    }
}

/// Outcome of one detection attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRecord {
    pub slot: u64,
    pub setting: MeasurementSetting,
    pub clicked: bool,
    /// Click time quantized to the detector resolution (time-of-arrival only).
    pub click_time: Option<f64>,
    /// Unquantized click time, kept for diagnostics.
    pub raw_time: Option<f64>,
    /// Index of the projector that fired (frequency settings only).
    pub bit_value: Option<u8>,
}

impl DetectionRecord {
    pub fn idle(slot: u64, setting: MeasurementSetting) -> Self {
        Self {
            slot,
            setting,
            clicked: false,
            click_time: None,
            raw_time: None,
            bit_value: None,
        }
    }
}

/// `Tr{rho E_which}` for the monochromatic carrier; independent of time.
pub fn prob_frequency(state: &FrequencyQubit, which: u8) -> f64 {
    state.prepared()[usize::from(which.min(1))].norm_sqr()
}

/// Click-time density of the monochromatic carrier (periodic in `t` with period `T`).
pub fn time_density(state: &FrequencyQubit, t: f64) -> f64 {
    mono_density(state, t, Prefactors::Off)
}

/// Time density with the propagation phases of a channel of length `length_m`
/// and group velocity `speed`, optionally with the `sqrt(w_k)` field weights.
pub fn channel_time_density(
    state: &FrequencyQubit,
    t: f64,
    length_m: f64,
    speed: f64,
    prefactors: Prefactors,
) -> f64 {
    mono_density(&state.delayed(length_m / speed), t, prefactors)
}

fn mono_density(state: &FrequencyQubit, t: f64, prefactors: Prefactors) -> f64 {
    let [f0, f1] = weighted(state, prefactors);
    let basis = state.basis();
    let tau = t - state.t0();
    let phase = crate::states::phase_mod(-(basis.omega0 - basis.omega1), tau);
    let fringe =
        f0.norm_sqr() + f1.norm_sqr() + 2.0 * (f0 * f1.conj() * Complex64::from_polar(1.0, phase)).re;
    // rounding can leave a -1e-17 at an exact zero of the fringe
    fringe.max(0.0) / basis.period()
}

/// Amplitudes with the field weights applied and renormalized over one period.
fn weighted(state: &FrequencyQubit, prefactors: Prefactors) -> [Complex64; 2] {
    let [f0, f1] = state.prepared();
    match prefactors {
        Prefactors::Off => [f0, f1],
        Prefactors::Exact => {
            let b = state.basis();
            let (g0, g1) = (f0 * b.omega0.sqrt(), f1 * b.omega1.sqrt());
            let n = (g0.norm_sqr() + g1.norm_sqr()).sqrt();
            [g0 / n, g1 / n]
        }
    }
}

/// Peak of the monochromatic density, `(|f0| + |f1|)^2 / T`.
fn mono_bound(state: &FrequencyQubit, prefactors: Prefactors) -> f64 {
    let [f0, f1] = weighted(state, prefactors);
    (f0.norm() + f1.norm()).powi(2) / state.period()
}

/// Click-time density of a Gaussian carrier after a channel of length `length_m`.
pub fn gaussian_time_density(state: &GaussianState, t: f64, length_m: f64, speed: f64) -> f64 {
    let s = t - state.t0() - length_m / speed;
    let sigma = state.sigma();
    let envelope = sigma * (2.0 / PI).sqrt() * (-2.0 * sigma * sigma * s * s).exp();
    envelope * state.norm().powi(2) * gaussian_fringe(state, s)
}

/// `|sum_j w_j exp(-i (c_j - c_0) s)|^2`.
fn gaussian_fringe(state: &GaussianState, s: f64) -> f64 {
    let reference = state.lines()[0].center;
    state
        .lines()
        .iter()
        .map(|l| l.weight * Complex64::from_polar(1.0, crate::states::phase_mod(-(l.center - reference), s)))
        .sum::<Complex64>()
        .norm_sqr()
}

/// Time interval outside of which the Gaussian density is below `exp(-128)` of its peak.
pub fn gaussian_support(state: &GaussianState, length_m: f64, speed: f64) -> (f64, f64) {
    let center = state.t0() + length_m / speed;
    let half = ENVELOPE_HALF_WIDTH / state.sigma();
    (center - half, center + half)
}

fn gaussian_bound(state: &GaussianState) -> f64 {
    let peak_fringe: f64 = state.lines().iter().map(|l| l.weight.norm()).sum::<f64>().powi(2);
    state.sigma() * (2.0 / PI).sqrt() * state.norm().powi(2) * peak_fringe
}

/// Filter band of projector `which`: centered on its basis frequency, half the splitting wide each side.
pub fn filter_band(basis: &FrequencyBasis, which: u8) -> (f64, f64) {
    let half = 0.5 * basis.splitting().abs();
    let center = basis.omega(usize::from(which));
    (center - half, center + half)
}

/// Probability that projector `which` fires for `carrier`.
pub fn click_probability(carrier: &Carrier, basis: &FrequencyBasis, which: u8) -> f64 {
    match carrier {
        Carrier::Mono(q) => prob_frequency(q, which),
        Carrier::Gaussian(g) => {
            let (lo, hi) = filter_band(basis, which);
            g.band_probability(lo, hi).clamp(0.0, 1.0)
        }
    }
}

/// Draw from `density` on `[lo, hi)` by rejection against the constant `bound`.
pub fn rejection_sample<R, F>(rng: &mut R, lo: f64, hi: f64, bound: f64, density: F) -> f64
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    debug_assert!(bound > 0.0 && hi > lo);
    loop {
        let t = lo + (hi - lo) * rng.random::<f64>();
        let u = bound * rng.random::<f64>();
        if u < density(t) {
            return t;
        }
    }
}

/// Draw a click time for the carrier (unquantized).
///
/// For the monochromatic carrier the time lies in `[t0, t0 + T)`; for the
/// Gaussian carrier it lies in the envelope support.
pub fn sample_click_time<R: Rng + ?Sized>(carrier: &Carrier, prefactors: Prefactors, rng: &mut R) -> f64 {
    match carrier {
        Carrier::Mono(q) => {
            let bound = mono_bound(q, prefactors);
            let t0 = q.t0();
            rejection_sample(rng, t0, t0 + q.period(), bound, |t| mono_density(q, t, prefactors))
        }
        Carrier::Gaussian(g) => {
            let (lo, hi) = gaussian_support(g, 0.0, 1.0);
            rejection_sample(rng, lo, hi, gaussian_bound(g), |t| gaussian_time_density(g, t, 0.0, 1.0))
        }
    }
}

/// Detector configuration shared by every slot of a session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    /// Centers of Bob's two narrow-band filters.
    pub basis: FrequencyBasis,
    pub timing: DetectorTiming,
    pub prefactors: Prefactors,
    /// Probability of a spurious click in a slot where the photon did not fire the detector.
    pub dark_count_prob: f64,
}

impl Detector {
    pub fn ideal(basis: FrequencyBasis, timing: DetectorTiming) -> Self {
        Self {
            basis,
            timing,
            prefactors: Prefactors::Off,
            dark_count_prob: 0.0,
        }
    }

    /// Check the waiting window covers the arrival distribution of `carrier`.
    pub fn check_window(&self, carrier: &Carrier) -> Result<()> {
        let needed = match carrier {
            Carrier::Mono(q) => q.period(),
            Carrier::Gaussian(g) => 2.0 * ENVELOPE_HALF_WIDTH / g.sigma(),
        };
        if self.timing.window < needed * (1.0 - 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "detector window {:e} s is shorter than the arrival spread {needed:e} s",
                self.timing.window
            )));
        }
        Ok(())
    }
}

/// `sample_outcome`: one detection attempt on `carrier` (or on nothing if the photon was lost).
///
/// `slot_start` is the origin of the resolution bins for the slot.
pub fn sample_outcome<R: Rng + ?Sized>(
    carrier: Option<&Carrier>,
    setting: MeasurementSetting,
    detector: &Detector,
    slot: u64,
    slot_start: f64,
    rng: &mut R,
) -> Result<DetectionRecord> {
    let mut record = DetectionRecord::idle(slot, setting);
    if let Some(carrier) = carrier {
        match setting {
            MeasurementSetting::FreqE0 | MeasurementSetting::FreqE1 => {
                let which = setting.projector().unwrap_or(0);
                let p = click_probability(carrier, &detector.basis, which);
                if rng.random::<f64>() < p {
                    record.clicked = true;
                    record.bit_value = Some(which);
                }
            }
            MeasurementSetting::TimeOfArrival(timing) => {
                detector.check_window(carrier)?;
                let raw = sample_click_time(carrier, detector.prefactors, rng);
                record.clicked = true;
                record.raw_time = Some(raw);
                record.click_time = Some(timing.quantize(raw, slot_start));
            }
        }
    }
    if !record.clicked && detector.dark_count_prob > 0.0 && rng.random::<f64>() < detector.dark_count_prob {
        record.clicked = true;
        match setting {
            MeasurementSetting::TimeOfArrival(timing) => {
                let raw = slot_start + timing.window * rng.random::<f64>();
                record.raw_time = Some(raw);
                record.click_time = Some(timing.quantize(raw, slot_start));
            }
            _ => record.bit_value = setting.projector(),
        }
    }
    Ok(record)
}

/// Probabilities of the two conclusive tests built from `1 - |psi><psi|`
/// projectors: `(p_own, p_cross) = (0, 1 - |<psi0|psi1>|^2)`.
pub fn b92_test_probs(psi0: &FrequencyQubit, psi1: &FrequencyQubit) -> Result<(f64, f64)> {
    let overlap = crate::states::inner_product(psi0, psi1)?.norm_sqr();
    Ok((0.0, (1.0 - overlap).max(0.0)))
}

/// Mean photon number of a single-photon packet, `sum |f_k|^2`.
pub fn mean_photon_number(packet: &SpectralPacket) -> f64 {
    packet.norm_sqr()
}

/// Theoretical CDF of the monochromatic click time over one period starting at `t0`.
pub fn mono_arrival_cdf(
    state: &FrequencyQubit,
    prefactors: Prefactors,
) -> TabulatedCdf<impl Fn(f64) -> f64 + '_> {
    let t0 = state.t0();
    TabulatedCdf::new(move |t| mono_density(state, t, prefactors), t0, t0 + state.period(), CDF_CELLS)
}

/// Theoretical CDF of the Gaussian click time over its envelope support.
pub fn gaussian_arrival_cdf(
    state: &GaussianState,
    length_m: f64,
    speed: f64,
) -> TabulatedCdf<impl Fn(f64) -> f64 + '_> {
    let (lo, hi) = gaussian_support(state, length_m, speed);
    TabulatedCdf::new(move |t| gaussian_time_density(state, t, length_m, speed), lo, hi, CDF_CELLS * 4)
}

/// Boxed density used by [`arrival_cdf`].
pub type ArrivalDensity = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Theoretical click-time CDF of either carrier, owning its state.
///
/// Monochromatic carriers are tabulated over one period from `t0`, Gaussian
/// carriers over the envelope support.
pub fn arrival_cdf(carrier: &Carrier, prefactors: Prefactors) -> TabulatedCdf<ArrivalDensity> {
    match carrier {
        Carrier::Mono(q) => {
            let q = *q;
            let (lo, hi) = (q.t0(), q.t0() + q.period());
            TabulatedCdf::new(Box::new(move |t| mono_density(&q, t, prefactors)), lo, hi, CDF_CELLS)
        }
        Carrier::Gaussian(g) => {
            let g = g.clone();
            let (lo, hi) = gaussian_support(&g, 0.0, 1.0);
            TabulatedCdf::new(Box::new(move |t| gaussian_time_density(&g, t, 0.0, 1.0)), lo, hi, CDF_CELLS * 4)
        }
    }
}

/// `(max - min) / (max + min)` of sampled density values.
pub fn fringe_visibility(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi + lo > 0.0) {
        return 0.0;
    }
    (hi - lo) / (hi + lo)
}

/// Ensemble-averaged monochromatic density on `points` equally spaced times
/// over one period starting at `reference`.
pub fn ensemble_density(
    states: &[FrequencyQubit],
    reference: f64,
    points: usize,
    execution: crate::par::Execution,
) -> Vec<f64> {
    let Some(first) = states.first() else {
        return vec![0.0; points];
    };
    let period = first.period();
    let n = states.len() as f64;
    execution.map_indexed(points, |i| {
        let t = reference + period * i as f64 / points as f64;
        states.iter().map(|s| time_density(s, t)).sum::<f64>() / n
    })
}
