//! Fiber channel: loss, propagation phase with length jitter, and an aggregate
//! visibility factor standing in for dispersion and polarization drift.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::Carrier;

/// How the length offset `dL` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthJitter {
    /// Fresh zero-mean normal draw with std `delta_l_sigma` in every slot.
    #[default]
    PerSlot,
    /// Fixed offset `delta_l_sigma` in every slot.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub length_m: f64,
    /// Effective group velocity, m/s.
    #[serde(default = "default_speed")]
    pub c: f64,
    #[serde(default)]
    pub delta_l_sigma: f64,
    pub transmittance: f64,
    #[serde(default = "one")]
    pub visibility: f64,
    #[serde(default)]
    pub length_jitter: LengthJitter,
}

fn default_speed() -> f64 {
    crate::SPEED_OF_LIGHT
}

fn one() -> f64 {
    1.0
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::ideal()
    }
}

impl ChannelParams {
    /// Zero-length lossless channel.
    pub fn ideal() -> Self {
        Self {
            length_m: 0.0,
            c: crate::SPEED_OF_LIGHT,
            delta_l_sigma: 0.0,
            transmittance: 1.0,
            visibility: 1.0,
            length_jitter: LengthJitter::PerSlot,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.transmittance) || !unit.contains(&self.visibility) {
            return Err(Error::InvalidConfig(
                "transmittance and visibility must lie in [0, 1]".to_string(),
            ));
        }
        if !(self.length_m >= 0.0 && self.length_m.is_finite()) || !(self.delta_l_sigma >= 0.0) {
            return Err(Error::InvalidConfig(
                "channel length and length jitter must be non-negative".to_string(),
            ));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig("group velocity must be positive".to_string()));
        }
        Ok(())
    }

    /// Nominal propagation delay `L / c`.
    pub fn delay(&self) -> f64 {
        self.length_m / self.c
    }

    fn length_offset<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.length_jitter {
            LengthJitter::Frozen => self.delta_l_sigma,
            LengthJitter::PerSlot if self.delta_l_sigma > 0.0 => Normal::new(0.0, self.delta_l_sigma)
                .map(|n| n.sample(rng))
                .unwrap_or(0.0),
            LengthJitter::PerSlot => 0.0,
        }
    }
}

/// `propagate`: `None` if the photon is absorbed, otherwise the carrier with
/// phase `w_k (L + dL) / c` on each component.
///
/// A channel visibility `v < 1` scrambles the relative phase with probability
/// `1 - v`, which scales the ensemble interference term by exactly `v`.
pub fn propagate<R: Rng + ?Sized>(carrier: &Carrier, params: &ChannelParams, rng: &mut R) -> Option<Carrier> {
    if rng.random::<f64>() >= params.transmittance {
        return None;
    }
    let offset = params.length_offset(rng);
    let mut out = carrier.delayed((params.length_m + offset) / params.c);
    if params.visibility < 1.0 && rng.random::<f64>() >= params.visibility {
        out = out.with_relative_phase(std::f64::consts::TAU * rng.random::<f64>());
    }
    Some(out)
}

/// `jitter_phase_budget`: relative phase `delta_omega * delta_l / c` caused by
/// a length change, and whether it stays below a tenth of a cycle.
pub fn jitter_phase_budget(delta_l: f64, delta_omega: f64, c: f64) -> (f64, bool) {
    let phase = delta_omega * delta_l / c;
    (phase, phase <= std::f64::consts::TAU / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{ensemble_density, fringe_visibility};
    use crate::rng::seeded;
    use crate::states::{make_control_state, make_info_state, FrequencyQubit};
    use crate::Execution;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_1_SQRT_2, TAU};

    const W0: f64 = 1.2e15;
    const DW: f64 = 1e8;
    const C: f64 = crate::SPEED_OF_LIGHT;

    fn control() -> FrequencyQubit {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        make_control_state(h, h, 0.0, W0, W0 + DW).unwrap()
    }

    #[test]
    fn ideal_channel_is_identity() {
        let c = Carrier::Mono(control());
        let out = propagate(&c, &ChannelParams::ideal(), &mut seeded(0)).unwrap();
        assert_eq!(out, c);
    }

    #[test]
    fn opaque_channel_loses_everything() {
        let params = ChannelParams {
            transmittance: 0.0,
            ..ChannelParams::ideal()
        };
        let c = Carrier::Mono(control());
        let mut rng = seeded(1);
        assert!((0..1000).all(|_| propagate(&c, &params, &mut rng).is_none()));
    }

    #[test]
    fn loss_fraction() {
        let params = ChannelParams {
            transmittance: 0.8,
            ..ChannelParams::ideal()
        };
        let c = Carrier::Mono(control());
        let mut rng = seeded(2);
        let lost = (0..100_000).filter(|_| propagate(&c, &params, &mut rng).is_none()).count();
        assert!((lost as f64 / 1e5 - 0.2).abs() < 0.01);
    }

    #[test]
    fn loss_does_not_depend_on_the_state() {
        let params = ChannelParams {
            transmittance: 0.7,
            length_m: 1e3,
            delta_l_sigma: 0.5,
            ..ChannelParams::ideal()
        };
        let states = [
            Carrier::Mono(control()),
            Carrier::Mono(make_info_state(0, W0, W0 + DW).unwrap()),
            Carrier::Mono(make_info_state(1, W0, W0 + DW).unwrap()),
        ];
        let mut rng = seeded(3);
        let n = 33_334;
        let lost: Vec<f64> = states
            .iter()
            .map(|s| (0..n).filter(|_| propagate(s, &params, &mut rng).is_none()).count() as f64)
            .collect();
        // chi-square on a 3x2 table, 2 degrees of freedom; p > 0.01 <=> stat < 9.21
        let p = lost.iter().sum::<f64>() / (3.0 * n as f64);
        let stat: f64 = lost
            .iter()
            .map(|&l| {
                let (e_l, e_k) = (p * n as f64, (1.0 - p) * n as f64);
                (l - e_l).powi(2) / e_l + ((n as f64 - l) - e_k).powi(2) / e_k
            })
            .sum();
        assert!(stat < 9.21, "{stat}");
    }

    #[test]
    fn propagation_is_phase_only() {
        let params = ChannelParams {
            length_m: 12_345.6,
            delta_l_sigma: 3.0,
            ..ChannelParams::ideal()
        };
        let s = make_control_state(Complex64::from_polar(0.6, 0.1), Complex64::from_polar(0.8, 2.0), 0.0, W0, W0 + DW)
            .unwrap();
        let mut rng = seeded(4);
        for _ in 0..100 {
            let Some(Carrier::Mono(out)) = propagate(&Carrier::Mono(s), &params, &mut rng) else {
                panic!("lossless channel dropped a photon");
            };
            let [a, b] = out.prepared();
            assert!((a.norm() - 0.6).abs() < 1e-12 && (b.norm() - 0.8).abs() < 1e-12);
            assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    fn blurred_visibility(delta_l: f64) -> f64 {
        let params = ChannelParams {
            delta_l_sigma: delta_l,
            ..ChannelParams::ideal()
        };
        let mut rng = seeded(5);
        let c = Carrier::Mono(control());
        let states: Vec<FrequencyQubit> = (0..10_000)
            .map(|_| match propagate(&c, &params, &mut rng) {
                Some(Carrier::Mono(q)) => q,
                _ => unreachable!(),
            })
            .collect();
        fringe_visibility(&ensemble_density(&states, 0.0, 256, Execution::default()))
    }

    #[test]
    fn length_jitter_blurs_fringes() {
        // phase std = DW * dL / c
        assert!(blurred_visibility(0.05 * C / DW) > 0.95);
        assert!(blurred_visibility(2.5 * C / DW) < 0.5);
    }

    #[test]
    fn visibility_factor_scales_the_cross_term() {
        let params = ChannelParams {
            visibility: 0.6,
            ..ChannelParams::ideal()
        };
        let mut rng = seeded(6);
        let c = Carrier::Mono(control());
        let states: Vec<FrequencyQubit> = (0..20_000)
            .map(|_| match propagate(&c, &params, &mut rng) {
                Some(Carrier::Mono(q)) => q,
                _ => unreachable!(),
            })
            .collect();
        let v = fringe_visibility(&ensemble_density(&states, 0.0, 256, Execution::default()));
        assert!((v - 0.6).abs() < 0.03, "{v}");
    }

    #[test]
    fn phase_budget() {
        assert_eq!(jitter_phase_budget(0.0, DW, C), (0.0, true));
        let full = TAU * C / DW;
        let (phase, soft) = jitter_phase_budget(full, DW, C);
        assert!((phase - TAU).abs() < 1e-12 && !soft);
        assert!((full - 18.84).abs() < 0.01);
        let (phase, soft) = jitter_phase_budget(0.1, DW, C);
        assert!((phase - 0.03336).abs() < 1e-4 && soft);
    }

    #[test]
    fn validation() {
        assert!(ChannelParams::ideal().validate().is_ok());
        let bad = ChannelParams {
            transmittance: 1.5,
            ..ChannelParams::ideal()
        };
        assert!(bad.validate().is_err());
    }
}
