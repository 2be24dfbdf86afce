//! Phenomenological heralded single-photon source.
//!
//! A short pump pulse of length `tau_pi` excites the emitter at a jittered
//! time `t0`; radiative decay (time `tau_r`) releases a broadband packet of
//! width `~1 / tau_r`. Narrow filters of width `sigma` at the basis frequencies
//! then carve the information or control state out of the packet, succeeding
//! only with the band's share of the spectrum.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::{make_gaussian_state, FrequencyBasis, GaussianState, SpectralPacket};

/// Filter cells per band width `sigma`.
const CELLS_PER_SIGMA: f64 = 16.0;

/// "Much less than" is read as a ratio of at most this.
pub const MUCH_LESS: f64 = 0.1;

/// Lineshape of the emitted packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumShape {
    /// Lorentzian with half-width equal to the spectral width, truncated at four half-widths.
    #[default]
    Lorentzian,
    /// Flat over a band equal to the spectral width.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    /// Excitation pulse duration, s.
    pub tau_pi: f64,
    /// Radiative recombination time, s.
    pub tau_r: f64,
    /// Packet spectral width, rad/s. Defaults to `1 / tau_r`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_omega_spectrum: Option<f64>,
    /// Width of the carving filters, rad/s.
    pub sigma: f64,
    pub omega0: f64,
    pub omega1: f64,
    #[serde(default)]
    pub spectrum: SpectrumShape,
}

impl SourceParams {
    /// Order-of-magnitude values from the implementation discussion.
    pub fn reference() -> Self {
        Self {
            tau_pi: 1e-12,
            tau_r: 1e-10,
            delta_omega_spectrum: None,
            sigma: 1e7,
            omega0: 1.2e15,
            omega1: 1.2e15 + 1e8,
            spectrum: SpectrumShape::Lorentzian,
        }
    }

    pub fn spectral_width(&self) -> f64 {
        self.delta_omega_spectrum.unwrap_or(1.0 / self.tau_r)
    }

    pub fn basis(&self) -> Result<FrequencyBasis> {
        FrequencyBasis::new(self.omega0, self.omega1)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.tau_r, self.sigma, self.spectral_width()];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !(self.tau_pi >= 0.0) {
            return Err(Error::InvalidConfig(
                "source times and widths must be positive and finite".to_string(),
            ));
        }
        let basis = self.basis()?;
        if self.sigma >= basis.splitting().abs() {
            return Err(Error::InvalidConfig(format!(
                "filter width sigma={:e} must be below the splitting {:e}",
                self.sigma,
                basis.splitting().abs()
            )));
        }
        if self.tau_pi >= self.tau_r {
            return Err(Error::RegimeViolation(format!(
                "pump pulse tau_pi={:e} s is not shorter than tau_r={:e} s",
                self.tau_pi, self.tau_r
            )));
        }
        Ok(())
    }
}

/// `excite`: emission time `slot_start + u`, `u` uniform on `[0, tau_pi]`.
pub fn excite<R: Rng + ?Sized>(slot_start: f64, params: &SourceParams, rng: &mut R) -> f64 {
    if params.tau_pi == 0.0 {
        return slot_start;
    }
    slot_start + params.tau_pi * rng.random::<f64>()
}

/// `emit_packet`: normalized packet centered between the basis frequencies.
///
/// The grid is aligned so that the carving bands `w_k +- sigma / 2` fall on
/// cell edges; each cell carries the exact lineshape mass of its interval and
/// the phase `exp(-i (w - w_c) t0)` relative to the center `w_c`.
pub fn emit_packet(t0: f64, params: &SourceParams) -> Result<SpectralPacket> {
    params.validate()?;
    let width = params.spectral_width();
    let h = params.sigma / CELLS_PER_SIGMA;
    // offsets from omega0; the first band edge sits at -sigma / 2
    let center = 0.5 * (params.omega1 - params.omega0);
    let anchor = -0.5 * params.sigma;
    let (lo, hi, mass): (f64, f64, Box<dyn Fn(f64, f64) -> f64>) = match params.spectrum {
        SpectrumShape::Lorentzian => {
            let gamma = width;
            let cdf = move |x: f64| ((x - center) / gamma).atan() / PI;
            (center - 4.0 * gamma, center + 4.0 * gamma, Box::new(move |a, b| cdf(b) - cdf(a)))
        }
        SpectrumShape::Flat => (center - 0.5 * width, center + 0.5 * width, Box::new(|a, b| b - a)),
    };
    let first = ((lo - anchor) / h).floor() as i64;
    let last = ((hi - anchor) / h).ceil() as i64;
    let mut offsets = Vec::with_capacity((last - first) as usize);
    let mut weights = Vec::with_capacity((last - first) as usize);
    for j in first..last {
        let a = (anchor + h * j as f64).max(lo);
        let b = (anchor + h * (j + 1) as f64).min(hi);
        offsets.push(anchor + h * (j as f64 + 0.5));
        weights.push(if b > a { mass(a, b) } else { 0.0 });
    }
    let total: f64 = weights.iter().sum();
    let amplitudes = offsets
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| {
            let phase = crate::states::phase_mod(-(x - center), t0);
            Complex64::from_polar((w / total).sqrt(), phase)
        })
        .collect();
    let omegas = offsets.iter().map(|x| params.omega0 + x).collect();
    SpectralPacket::new(omegas, amplitudes, t0)
}

/// Which bands the source filter opens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Zero,
    One,
    Control,
}

impl FilterMode {
    fn bands(self) -> &'static [usize] {
        match self {
            FilterMode::Zero => &[0],
            FilterMode::One => &[1],
            FilterMode::Control => &[0, 1],
        }
    }
}

/// Result of carving a packet.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    /// Share of the packet passing the open bands.
    pub herald_prob: f64,
    /// Renormalized band content; `None` when nothing passes.
    pub state: Option<GaussianState>,
}

/// `[w_k - sigma/2, w_k + sigma/2]`.
pub fn source_band(params: &SourceParams, which: usize) -> (f64, f64) {
    let w = if which == 0 { params.omega0 } else { params.omega1 };
    (w - 0.5 * params.sigma, w + 0.5 * params.sigma)
}

/// Sum of packet amplitudes whose cells lie inside `band`, and their total weight.
pub fn band_sum(packet: &SpectralPacket, band: (f64, f64)) -> (Complex64, f64) {
    let half = 0.5 * packet.step();
    packet
        .omegas()
        .iter()
        .zip(packet.amplitudes())
        .filter(|(&w, _)| w - half >= band.0 - 1e-3 * half && w + half <= band.1 + 1e-3 * half)
        .fold((Complex64::new(0.0, 0.0), 0.0), |(s, m), (_, a)| (s + a, m + a.norm_sqr()))
}

/// `filter_packet`: project the packet on the open bands.
///
/// The returned state keeps the band-summed amplitude of each band, with the
/// emission phase `exp(-i (w - w_c) t0)` moved into the state's `t0`, so the
/// relative phase of the bands survives the projection.
pub fn filter_packet(packet: &SpectralPacket, mode: FilterMode, params: &SourceParams) -> Result<FilterOutcome> {
    let (span_lo, span_hi) = packet.span();
    let center = 0.5 * (params.omega0 + params.omega1);
    let t0 = packet.t0();
    let mut lines = Vec::with_capacity(2);
    let mut herald = 0.0;
    for &k in mode.bands() {
        let band = source_band(params, k);
        if band.1 <= span_lo || band.0 >= span_hi {
            return Err(Error::DegenerateFilter {
                low: band.0,
                high: band.1,
            });
        }
        let (sum, mass) = band_sum(packet, band);
        herald += mass;
        let w = if k == 0 { params.omega0 } else { params.omega1 };
        // take the emission phase of the band center back out
        let rewind = Complex64::from_polar(1.0, crate::states::phase_mod(w - center, t0));
        let phase = if sum.norm() > 0.0 { (sum * rewind).arg() } else { 0.0 };
        lines.push((w, Complex64::from_polar(mass.sqrt(), phase)));
    }
    if herald <= 0.0 {
        return Ok(FilterOutcome {
            herald_prob: 0.0,
            state: None,
        });
    }
    let scale = herald.sqrt().recip();
    let lines: Vec<(f64, Complex64)> = lines
        .into_iter()
        .filter(|(_, w)| w.norm() > 0.0)
        .map(|(c, w)| (c, w * scale))
        .collect();
    let state = make_gaussian_state(&lines, params.sigma, t0)?;
    Ok(FilterOutcome {
        herald_prob: herald,
        state: Some(state),
    })
}

/// One link of the timing chain `tau_pi << tau_r << tau_det << 1/delta_omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCheck {
    pub inequality: String,
    /// Left side over right side.
    pub ratio: f64,
    pub satisfied: bool,
}

/// `timing_regime_check`: evaluate the chain with `<<` meaning a ratio of at most [`MUCH_LESS`].
pub fn timing_regime_check(params: &SourceParams, tau_det: f64, delta_omega: f64) -> Vec<RegimeCheck> {
    let links = [
        ("tau_pi << tau_r", params.tau_pi / params.tau_r),
        ("tau_r << tau_det", params.tau_r / tau_det),
        ("tau_det << 1/delta_omega", tau_det * delta_omega),
    ];
    links
        .into_iter()
        .map(|(name, ratio)| RegimeCheck {
            inequality: name.to_string(),
            ratio,
            // products like 1e-9 * 1e8 round a few ulps above 0.1
            satisfied: ratio <= MUCH_LESS * (1.0 + 1e-9),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::mean_photon_number;
    use crate::quadrature::adaptive_simpson;
    use crate::rng::seeded;

    fn flat() -> SourceParams {
        SourceParams {
            spectrum: SpectrumShape::Flat,
            ..SourceParams::reference()
        }
    }

    #[test]
    fn excite_without_jitter() {
        let p = SourceParams {
            tau_pi: 0.0,
            ..SourceParams::reference()
        };
        assert_eq!(excite(3.5, &p, &mut seeded(0)), 3.5);
    }

    #[test]
    fn excite_jitter_bounds_and_mean() {
        let p = SourceParams::reference();
        let mut rng = seeded(11);
        let draws: Vec<f64> = (0..10_000).map(|_| excite(0.0, &p, &mut rng)).collect();
        assert!(draws.iter().all(|&d| (0.0..=p.tau_pi).contains(&d)));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean / (p.tau_pi / 2.0) - 1.0).abs() < 0.05);
        // far below the beat period 2 pi / 1e8
        assert!(p.tau_pi < 1e-3 * 2.0 * PI / 1e8);
    }

    #[test]
    fn emission_jitter_blurs_fringes() {
        use crate::measurement::{ensemble_density, fringe_visibility};
        use crate::states::FrequencyQubit;
        use num_complex::Complex64;

        let basis = SourceParams::reference().basis().unwrap();
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let visibility = |tau_pi: f64| {
            let params = SourceParams {
                tau_pi,
                ..SourceParams::reference()
            };
            let mut rng = seeded(9);
            let states: Vec<FrequencyQubit> = (0..10_000)
                .map(|_| FrequencyQubit::control(h, h, excite(0.0, &params, &mut rng), basis).unwrap())
                .collect();
            fringe_visibility(&ensemble_density(&states, 0.0, 256, crate::Execution::Sequential))
        };
        assert!(visibility(basis.period() / 2.0) < 0.7);
        assert!(visibility(basis.period() / 100.0) > 0.98);
    }

    #[test]
    fn packets_are_normalized() {
        for params in [SourceParams::reference(), flat()] {
            let p = emit_packet(1e-9, &params).unwrap();
            assert!((mean_photon_number(&p) - 1.0).abs() < 1e-9);
            assert_eq!(params.spectral_width(), 1e10);
        }
    }

    #[test]
    fn equal_emission_times_give_equal_phases() {
        let a = emit_packet(2.5e-9, &flat()).unwrap();
        let b = emit_packet(2.5e-9, &flat()).unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
    }

    #[test]
    fn flat_heralding_matches_width_ratio() {
        let params = flat();
        let packet = emit_packet(0.0, &params).unwrap();
        let one = filter_packet(&packet, FilterMode::Zero, &params).unwrap();
        assert!((one.herald_prob - 1e-3).abs() < 1e-12, "{}", one.herald_prob);
        let both = filter_packet(&packet, FilterMode::Control, &params).unwrap();
        assert!((both.herald_prob - 2e-3).abs() < 1e-12);
        assert!(both.state.unwrap().lines().len() == 2);
    }

    #[test]
    fn heralding_equals_lineshape_quadrature() {
        let params = SourceParams::reference();
        let packet = emit_packet(0.0, &params).unwrap();
        let gamma = params.spectral_width();
        let center = 0.5 * (params.omega1 - params.omega0);
        let truncated = 2.0 * 4f64.atan() / PI;
        let lorentz = |x: f64| gamma / (PI * ((x - center).powi(2) + gamma * gamma)) / truncated;
        for k in 0..2 {
            let (a, b) = source_band(&params, k);
            let exact = adaptive_simpson(&lorentz, a - params.omega0, b - params.omega0, 1e-16);
            let got = band_sum(&packet, (a, b)).1;
            assert!((got - exact).abs() < 1e-9, "{got} vs {exact}");
        }
    }

    #[test]
    fn empty_band_gives_zero_herald() {
        let params = flat();
        let packet = emit_packet(0.0, &params).unwrap();
        // silence the omega0 band while keeping the grid
        let amps: Vec<Complex64> = packet
            .omegas()
            .iter()
            .zip(packet.amplitudes())
            .map(|(&w, &a)| if (w - params.omega0).abs() < params.sigma { Complex64::new(0.0, 0.0) } else { a })
            .collect();
        let holed = SpectralPacket::unnormalized(packet.omegas().to_vec(), amps, 0.0).unwrap();
        let out = filter_packet(&holed, FilterMode::Zero, &params).unwrap();
        assert_eq!(out.herald_prob, 0.0);
        assert!(out.state.is_none());
    }

    #[test]
    fn band_outside_packet_is_degenerate() {
        let params = flat();
        let packet = emit_packet(0.0, &params).unwrap();
        let far = SourceParams {
            omega0: params.omega0 + 1e11,
            omega1: params.omega0 + 1e11 + 1e8,
            ..params
        };
        assert!(matches!(
            filter_packet(&packet, FilterMode::Zero, &far),
            Err(Error::DegenerateFilter { .. })
        ));
    }

    #[test]
    fn control_filtering_keeps_relative_phase() {
        let params = flat();
        let t0 = 3.7e-9;
        let packet = emit_packet(t0, &params).unwrap();
        let (s0, _) = band_sum(&packet, source_band(&params, 0));
        let (s1, _) = band_sum(&packet, source_band(&params, 1));
        let before = (s1 / s0).arg();
        let state = filter_packet(&packet, FilterMode::Control, &params).unwrap().state.unwrap();
        let lines = state.lines();
        // emission phase of the state: exp(-i w t0) on each line
        let after = (lines[1].weight / lines[0].weight).arg() - (params.omega1 - params.omega0) * t0;
        let d = (after - before).rem_euclid(2.0 * PI);
        assert!(d.min(2.0 * PI - d) < 1e-9, "{before} {after}");
    }

    #[test]
    fn regime_chain_reference_values() {
        let checks = timing_regime_check(&SourceParams::reference(), 1e-9, 1e8);
        assert!(checks.iter().all(|c| c.satisfied));
        let ratios: Vec<f64> = checks.iter().map(|c| c.ratio).collect();
        for (got, want) in ratios.iter().zip([1e-2, 1e-1, 1e-1]) {
            assert!((got / want - 1.0).abs() < 1e-12);
        }
        let slow = SourceParams {
            tau_pi: 1e-10,
            ..SourceParams::reference()
        };
        let checks = timing_regime_check(&slow, 1e-9, 1e8);
        assert!(!checks[0].satisfied);
        assert!(checks[1].satisfied && checks[2].satisfied);
    }

    #[test]
    fn validation() {
        assert!(SourceParams::reference().validate().is_ok());
        let bad = SourceParams {
            tau_pi: 2e-10,
            ..SourceParams::reference()
        };
        assert!(matches!(bad.validate(), Err(Error::RegimeViolation(_))));
        let wide = SourceParams {
            sigma: 2e8,
            ..SourceParams::reference()
        };
        assert!(matches!(wide.validate(), Err(Error::InvalidConfig(_))));
    }
}
