//! Carrier states: the two-frequency qubit idealization and its finite-linewidth
//! Gaussian counterpart, plus the broadband single-photon packet emitted by the
//! source before filtering.
//!
//! Frequencies are angular (rad/s) throughout. Only relative phases between the
//! two frequency components are physical; amplitudes are reported in the frame
//! rotating at `omega0`, which drops a global phase and keeps the arithmetic
//! well conditioned at optical carrier frequencies.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::DEFAULT_TOLERANCE;

pub(crate) const NORM_TOLERANCE: f64 = 1e-9;

/// Pair of basis frequencies `omega0`, `omega1` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBasis {
    pub omega0: f64,
    pub omega1: f64,
}

impl FrequencyBasis {
    pub fn new(omega0: f64, omega1: f64) -> Result<Self> {
        if !(omega0.is_finite() && omega1.is_finite()) || omega0 <= 0.0 || omega1 <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "basis frequencies must be positive and finite, got {omega0:e}, {omega1:e}"
            )));
        }
        if omega0 == omega1 {
            return Err(Error::InvalidConfig(
                "basis frequencies must differ".to_string(),
            ));
        }
        Ok(Self { omega0, omega1 })
    }

    /// `omega1 - omega0`.
    pub fn splitting(&self) -> f64 {
        self.omega1 - self.omega0
    }

    /// Beat period `T = 2 pi / |omega1 - omega0|`.
    pub fn period(&self) -> f64 {
        TAU / self.splitting().abs()
    }

    pub fn omega(&self, which: usize) -> f64 {
        if which == 0 {
            self.omega0
        } else {
            self.omega1
        }
    }
}

/// Single photon in the span of two monochromatic modes.
///
/// `prepared` holds the amplitudes `f0`, `f1` fixed at the preparation instant
/// `t0`; `clock` is the time the state has been evolved to. The detection
/// densities depend only on `prepared` and `t0`, evolution only moves the
/// clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyQubit {
    prepared: [Complex64; 2],
    basis: FrequencyBasis,
    t0: f64,
    clock: f64,
}

impl FrequencyQubit {
    /// Information state `|e0>` or `|e1>`.
    pub fn info(bit: u8, basis: FrequencyBasis) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let prepared = if bit == 0 { [one, zero] } else { [zero, one] };
        Self {
            prepared,
            basis,
            t0: 0.0,
            clock: 0.0,
        }
    }

    /// Control state `f0 e^{-i w0 t0}|e0> + f1 e^{-i w1 t0}|e1>`.
    ///
    /// The amplitudes must already satisfy `|f0|^2 + |f1|^2 = 1`; nothing is
    /// renormalized.
    pub fn control(f0: Complex64, f1: Complex64, t0: f64, basis: FrequencyBasis) -> Result<Self> {
        let norm_sq = f0.norm_sqr() + f1.norm_sqr();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self {
            prepared: [f0, f1],
            basis,
            t0,
            clock: t0,
        })
    }

    pub fn basis(&self) -> FrequencyBasis {
        self.basis
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn period(&self) -> f64 {
        self.basis.period()
    }

    /// Amplitudes `f0`, `f1` at the preparation instant.
    pub fn prepared(&self) -> [Complex64; 2] {
        self.prepared
    }

    /// Amplitudes at the current clock, `f_k e^{-i w_k clock}` in the `omega0` frame.
    pub fn amplitudes(&self) -> [Complex64; 2] {
        let phase = phase_mod(-self.basis.splitting(), self.clock);
        [self.prepared[0], self.prepared[1] * Complex64::from_polar(1.0, phase)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.prepared[0].norm_sqr() + self.prepared[1].norm_sqr()
    }

    /// Free evolution to time `t`: amplitude `k` picks up `e^{-i w_k (t - clock)}`.
    pub fn evolve(&self, t: f64) -> Self {
        Self { clock: t, ..*self }
    }

    /// Relative phase `arg(a1 / a0)` of the current amplitudes, if both are nonzero.
    pub fn relative_phase(&self) -> Option<f64> {
        let [a0, a1] = self.amplitudes();
        if a0.norm() == 0.0 || a1.norm() == 0.0 {
            return None;
        }
        Some((a1 / a0).arg())
    }

    /// Apply the propagation phase `w_k d` for a delay `d` (seconds).
    ///
    /// The common phase `w0 d` is dropped.
    pub fn delayed(&self, delay: f64) -> Self {
        let shift = Complex64::from_polar(1.0, phase_mod(self.basis.splitting(), delay));
        Self {
            prepared: [self.prepared[0], self.prepared[1] * shift],
            ..*self
        }
    }

    /// Same preparation emitted at `t0`.
    pub fn at(&self, t0: f64) -> Self {
        Self { t0, clock: t0, ..*self }
    }

    /// Replace the relative phase of the prepared amplitudes.
    pub(crate) fn with_relative_phase(&self, phase: f64) -> Self {
        let f1 = Complex64::from_polar(self.prepared[1].norm(), phase + self.prepared[0].arg());
        Self {
            prepared: [self.prepared[0], f1],
            ..*self
        }
    }
}

/// `(omega * t) mod 2 pi`, computed so that large products keep their fractional part.
pub(crate) fn phase_mod(omega: f64, t: f64) -> f64 {
    (omega * t).rem_euclid(TAU)
}

/// `make_info_state`: basis state for `bit`.
pub fn make_info_state(bit: u8, omega0: f64, omega1: f64) -> Result<FrequencyQubit> {
    if bit > 1 {
        return Err(Error::InvalidConfig(format!("bit must be 0 or 1, got {bit}")));
    }
    Ok(FrequencyQubit::info(bit, FrequencyBasis::new(omega0, omega1)?))
}

/// `make_control_state`: superposition prepared at `t0`.
pub fn make_control_state(
    f0: Complex64,
    f1: Complex64,
    t0: f64,
    omega0: f64,
    omega1: f64,
) -> Result<FrequencyQubit> {
    FrequencyQubit::control(f0, f1, t0, FrequencyBasis::new(omega0, omega1)?)
}

/// `<a|b>`, conjugate-linear in `a`, using the amplitudes at each state's clock.
pub fn inner_product(a: &FrequencyQubit, b: &FrequencyQubit) -> Result<Complex64> {
    if a.basis != b.basis {
        return Err(Error::BasisMismatch);
    }
    let (x, y) = (a.amplitudes(), b.amplitudes());
    Ok(x[0].conj() * y[0] + x[1].conj() * y[1])
}

/// One spectral line of a [`GaussianState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    pub center: f64,
    pub weight: Complex64,
}

/// Finite-linewidth single photon with one or two Gaussian spectral lines.
///
/// The spectral amplitude is
/// `norm (2 pi sigma^2)^{-1/4} sum_j w_j exp(-(w - c_j)^2 / (4 sigma^2))`,
/// with `norm` fixed by quadrature so that `|f(w)|^2` integrates to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    lines: Vec<SpectralLine>,
    sigma: f64,
    t0: f64,
    norm: f64,
}

impl GaussianState {
    pub fn lines(&self) -> &[SpectralLine] {
        &self.lines
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub(crate) fn reference(&self) -> f64 {
        self.lines[0].center
    }

    /// Same spectrum, emitted at `t0`.
    pub fn at(&self, t0: f64) -> Self {
        Self { t0, ..self.clone() }
    }

    /// Propagation over a path with delay `d`: every spectral component gains
    /// `w d`, which for a pure spectral phase is a rigid shift of the pulse.
    pub fn delayed(&self, delay: f64) -> Self {
        self.at(self.t0 + delay)
    }

    /// Spectral amplitude at `omega`, global phase dropped.
    pub fn amplitude(&self, omega: f64) -> Complex64 {
        self.amplitude_offset(omega - self.reference())
    }

    fn amplitude_offset(&self, offset: f64) -> Complex64 {
        spectral_sum(&self.lines, self.reference(), self.sigma, offset) * self.norm
    }

    /// `|f(omega)|^2`.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        self.amplitude(omega).norm_sqr()
    }

    /// Probability that a rectangular filter `[low, high]` passes the photon.
    pub fn band_probability(&self, low: f64, high: f64) -> f64 {
        let r = self.reference();
        integrate_windows(
            &|u| self.amplitude_offset(u).norm_sqr(),
            &line_windows(&self.lines, r, self.sigma),
            low - r,
            high - r,
            self.sigma,
        )
    }

    /// Integral of `|f|^2` over all frequencies (one, up to quadrature error).
    pub fn total_probability(&self) -> f64 {
        self.band_probability(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Set the relative phase `arg(w1 / w0)` between the two lines.
    pub(crate) fn with_relative_phase(&self, phase: f64) -> Self {
        let mut out = self.clone();
        if out.lines.len() == 2 {
            let w0 = out.lines[0].weight;
            out.lines[1].weight = Complex64::from_polar(out.lines[1].weight.norm(), w0.arg() + phase);
        }
        out
    }
}

fn spectral_sum(lines: &[SpectralLine], reference: f64, sigma: f64, offset: f64) -> Complex64 {
    let pref = (2.0 * PI * sigma * sigma).powf(-0.25);
    lines
        .iter()
        .map(|l| {
            let x = (offset - (l.center - reference)) / (2.0 * sigma);
            l.weight * (-x * x).exp()
        })
        .sum::<Complex64>()
        * pref
}

/// Union of `[c - 8 sigma, c + 8 sigma]` windows, as offsets from `reference`.
fn line_windows(lines: &[SpectralLine], reference: f64, sigma: f64) -> Vec<(f64, f64)> {
    let mut spans: Vec<(f64, f64)> = lines
        .iter()
        .map(|l| {
            let c = l.center - reference;
            (c - 8.0 * sigma, c + 8.0 * sigma)
        })
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
    for (lo, hi) in spans {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

fn integrate_windows<F: Fn(f64) -> f64>(
    f: &F,
    windows: &[(f64, f64)],
    low: f64,
    high: f64,
    sigma: f64,
) -> f64 {
    windows
        .iter()
        .map(|&(a, b)| {
            let (lo, hi) = (a.max(low), b.min(high));
            if hi <= lo {
                return 0.0;
            }
            // panels no wider than sigma keep each Simpson estimate honest
            let pieces = ((hi - lo) / sigma).ceil().max(1.0) as usize;
            crate::quadrature::integrate_panels(f, lo, hi, pieces, DEFAULT_TOLERANCE)
        })
        .sum()
}

/// `make_gaussian_state`: one or two lines of width `sigma` emitted at `t0`.
pub fn make_gaussian_state(
    components: &[(f64, Complex64)],
    sigma: f64,
    t0: f64,
) -> Result<GaussianState> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma:e}")));
    }
    if components.is_empty() || components.len() > 2 {
        return Err(Error::InvalidConfig(format!(
            "a Gaussian state has one or two lines, got {}",
            components.len()
        )));
    }
    if components.iter().all(|(_, w)| w.norm() == 0.0) {
        return Err(Error::InvalidConfig("all line weights are zero".to_string()));
    }
    if components.iter().any(|(c, w)| !c.is_finite() || !w.re.is_finite() || !w.im.is_finite()) {
        return Err(Error::InvalidConfig("non-finite line parameter".to_string()));
    }
    let lines: Vec<SpectralLine> = components
        .iter()
        .map(|&(center, weight)| SpectralLine { center, weight })
        .collect();
    let reference = lines[0].center;
    let raw = integrate_windows(
        &|u| spectral_sum(&lines, reference, sigma, u).norm_sqr(),
        &line_windows(&lines, reference, sigma),
        f64::NEG_INFINITY,
        f64::INFINITY,
        sigma,
    );
    if !(raw > 0.0) {
        return Err(Error::InvalidConfig("Gaussian state has zero norm".to_string()));
    }
    Ok(GaussianState {
        lines,
        sigma,
        t0,
        norm: raw.powf(-0.5),
    })
}

/// A photon in flight: either idealization of the carrier.
#[derive(Debug, Clone, PartialEq)]
pub enum Carrier {
    Mono(FrequencyQubit),
    Gaussian(GaussianState),
}

impl Carrier {
    pub fn t0(&self) -> f64 {
        match self {
            Carrier::Mono(q) => q.t0(),
            Carrier::Gaussian(g) => g.t0(),
        }
    }

    /// Apply a propagation delay `d` seconds (phase `w_k d` on every component).
    /// Same preparation emitted at `t0`.
    pub fn at(&self, t0: f64) -> Self {
        match self {
            Carrier::Mono(q) => Carrier::Mono(q.at(t0)),
            Carrier::Gaussian(g) => Carrier::Gaussian(g.at(t0)),
        }
    }

    pub fn delayed(&self, delay: f64) -> Self {
        match self {
            Carrier::Mono(q) => Carrier::Mono(q.delayed(delay)),
            Carrier::Gaussian(g) => Carrier::Gaussian(g.delayed(delay)),
        }
    }

    /// Replace the relative phase between the two frequency components.
    pub fn with_relative_phase(&self, phase: f64) -> Self {
        match self {
            Carrier::Mono(q) => Carrier::Mono(q.with_relative_phase(phase)),
            Carrier::Gaussian(g) => Carrier::Gaussian(g.with_relative_phase(phase)),
        }
    }
}

/// Which idealization carries the photons of a session.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StateModel {
    #[default]
    Monochromatic,
    Gaussian { sigma: f64 },
}

/// Builds the carrier states of a session in the configured model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierFactory {
    pub basis: FrequencyBasis,
    /// `f0`, `f1` of the control state.
    pub control: [Complex64; 2],
    pub model: StateModel,
}

impl CarrierFactory {
    pub fn new(basis: FrequencyBasis, control: [Complex64; 2], model: StateModel) -> Result<Self> {
        let norm_sq = control[0].norm_sqr() + control[1].norm_sqr();
        if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sq });
        }
        if let StateModel::Gaussian { sigma } = model {
            if !(sigma > 0.0) {
                return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma:e}")));
            }
        }
        Ok(Self { basis, control, model })
    }

    /// Information state for `bit` emitted at `t0`.
    pub fn info(&self, bit: u8, t0: f64) -> Result<Carrier> {
        let mut amps = [Complex64::new(0.0, 0.0); 2];
        amps[usize::from(bit.min(1))] = Complex64::new(1.0, 0.0);
        self.superposition(amps, t0)
    }

    /// Control state emitted at `t0`.
    pub fn control(&self, t0: f64) -> Result<Carrier> {
        self.superposition(self.control, t0)
    }

    /// State with amplitudes `amps` (normalized) emitted at `t0`.
    pub fn superposition(&self, amps: [Complex64; 2], t0: f64) -> Result<Carrier> {
        match self.model {
            StateModel::Monochromatic => Ok(Carrier::Mono(FrequencyQubit::control(amps[0], amps[1], t0, self.basis)?)),
            StateModel::Gaussian { sigma } => {
                let lines: Vec<(f64, Complex64)> = amps
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.norm() > 0.0)
                    .map(|(k, &a)| (self.basis.omega(k), a))
                    .collect();
                Ok(Carrier::Gaussian(make_gaussian_state(&lines, sigma, t0)?))
            }
        }
    }
}

/// Broadband single-photon packet on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPacket {
    omegas: Vec<f64>,
    amplitudes: Vec<Complex64>,
    step: f64,
    t0: f64,
}

impl SpectralPacket {
    /// Normalized packet; rejects inputs with `sum |f_k|^2 != 1`.
    pub fn new(omegas: Vec<f64>, amplitudes: Vec<Complex64>, t0: f64) -> Result<Self> {
        let packet = Self::unnormalized(omegas, amplitudes, t0)?;
        let norm_sq = packet.norm_sqr();
        if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(packet)
    }

    /// Packet without the normalization check, for diagnostics.
    pub fn unnormalized(omegas: Vec<f64>, amplitudes: Vec<Complex64>, t0: f64) -> Result<Self> {
        if omegas.len() != amplitudes.len() || omegas.len() < 2 {
            return Err(Error::InvalidConfig(
                "packet grid needs at least two points and one amplitude per point".to_string(),
            ));
        }
        let step = omegas[1] - omegas[0];
        let uniform = omegas
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-6 * step.abs());
        if !(step > 0.0) || !uniform {
            return Err(Error::InvalidConfig(
                "packet grid must be uniform and increasing".to_string(),
            ));
        }
        Ok(Self {
            omegas,
            amplitudes,
            step,
            t0,
        })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Frequency span covered by the grid cells.
    pub fn span(&self) -> (f64, f64) {
        (
            self.omegas[0] - 0.5 * self.step,
            self.omegas[self.omegas.len() - 1] + 0.5 * self.step,
        )
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
            ..self.clone()
        }
    }
}
