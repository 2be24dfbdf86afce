use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::measurement::{Detector, DetectorTiming, Prefactors, ENVELOPE_HALF_WIDTH};
use crate::source::{timing_regime_check, SourceParams};
use crate::states::{CarrierFactory, FrequencyBasis, StateModel};

const PROB_TOLERANCE: f64 = 1e-12;

/// Alice's state frequencies `(p_c, p_0, p_1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AliceProbs {
    pub control: f64,
    pub zero: f64,
    pub one: f64,
}

/// Bob's setting frequencies `(p_E0, p_E1, p_Edt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BobProbs {
    pub e0: f64,
    pub e1: f64,
    pub edt: f64,
}

const THIRD: f64 = 1.0 / 3.0;

impl Default for AliceProbs {
    fn default() -> Self {
        Self {
            control: THIRD,
            zero: THIRD,
            one: THIRD,
        }
    }
}

impl Default for BobProbs {
    fn default() -> Self {
        Self {
            e0: THIRD,
            e1: THIRD,
            edt: THIRD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    pub tau_det: f64,
    pub window: f64,
    #[serde(default)]
    pub prefactors: Prefactors,
    #[serde(default)]
    pub dark_count_prob: f64,
}

/// Carrier idealization used for every photon of a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    Monochromatic,
    /// Gaussian lines of width `source.sigma`, the width of the carving filters.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub n_slots: u64,
    pub seed: u64,
    pub alice_probs: AliceProbs,
    pub bob_probs: BobProbs,
    /// `[f0, f1]` of the control state, each as `[re, im]`.
    pub control_amplitudes: [Complex64; 2],
    #[serde(default = "default_disclosure")]
    pub info_disclosure_fraction: f64,
    pub source: SourceParams,
    pub channel: ChannelParams,
    pub detector: DetectorParams,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub state_model: ModelKind,
}

fn default_disclosure() -> f64 {
    0.25
}

fn default_alpha() -> f64 {
    0.01
}

impl SessionConfig {
    /// Uniform choices, equal-weight control state, lossless zero-length fiber.
    pub fn reference(n_slots: u64, seed: u64) -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            n_slots,
            seed,
            alice_probs: AliceProbs::default(),
            bob_probs: BobProbs::default(),
            control_amplitudes: [h, h],
            info_disclosure_fraction: default_disclosure(),
            source: SourceParams::reference(),
            channel: ChannelParams::ideal(),
            detector: DetectorParams {
                tau_det: 1e-9,
                window: 2e-6,
                prefactors: Prefactors::Off,
                dark_count_prob: 0.0,
            },
            alpha: default_alpha(),
            state_model: ModelKind::Monochromatic,
        }
    }

    /// Parse and validate a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn canonical_hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        sha256_hex(text.as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_slots == 0 || self.n_slots >= 1 << 56 {
            return Err(Error::InvalidConfig(format!("n_slots must be in [1, 2^56), got {}", self.n_slots)));
        }
        let a = self.alice_probs;
        check_probs("alice_probs", [a.control, a.zero, a.one])?;
        let b = self.bob_probs;
        check_probs("bob_probs", [b.e0, b.e1, b.edt])?;
        let unit = 0.0..=1.0;
        if !unit.contains(&self.info_disclosure_fraction) {
            return Err(Error::InvalidConfig("info_disclosure_fraction must lie in [0, 1]".to_string()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !unit.contains(&self.detector.dark_count_prob) {
            return Err(Error::InvalidConfig("dark_count_prob must lie in [0, 1]".to_string()));
        }
        self.channel.validate()?;
        self.source.validate()?;
        let timing = self.timing()?;
        let basis = self.basis()?;
        for check in timing_regime_check(&self.source, timing.tau_det, basis.splitting().abs()) {
            if check.ratio > 1.0 {
                return Err(Error::RegimeViolation(format!(
                    "{} fails with ratio {:e}",
                    check.inequality, check.ratio
                )));
            }
        }
        let needed = match self.state_model {
            ModelKind::Monochromatic => basis.period(),
            ModelKind::Gaussian => 2.0 * ENVELOPE_HALF_WIDTH / self.source.sigma,
        };
        if timing.window < needed {
            return Err(Error::InvalidConfig(format!(
                "detector window {:e} s is shorter than the arrival spread {needed:e} s",
                timing.window
            )));
        }
        self.factory()?;
        Ok(())
    }

    pub fn basis(&self) -> Result<FrequencyBasis> {
        self.source.basis()
    }

    pub fn timing(&self) -> Result<DetectorTiming> {
        DetectorTiming::new(self.detector.tau_det, self.detector.window)
    }

    pub fn factory(&self) -> Result<CarrierFactory> {
        let model = match self.state_model {
            ModelKind::Monochromatic => StateModel::Monochromatic,
            ModelKind::Gaussian => StateModel::Gaussian {
                sigma: self.source.sigma,
            },
        };
        CarrierFactory::new(self.basis()?, self.control_amplitudes, model)
    }

    pub fn detector(&self) -> Result<Detector> {
        Ok(Detector {
            basis: self.basis()?,
            timing: self.timing()?,
            prefactors: self.detector.prefactors,
            dark_count_prob: self.detector.dark_count_prob,
        })
    }

    /// One state per slot of `max(window, 10 T)`.
    pub fn slot_duration(&self) -> Result<f64> {
        Ok(self.detector.window.max(10.0 * self.basis()?.period()))
    }
}

fn check_probs(name: &str, p: [f64; 3]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|v| !(0.0..=1.0).contains(v)) || (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(Error::InvalidConfig(format!(
            "{name} must be probabilities summing to 1, got {p:?} (sum {sum})"
        )));
    }
    Ok(())
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_is_valid_and_round_trips() {
        let c = SessionConfig::reference(100, 1);
        c.validate().unwrap();
        let back = SessionConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.canonical_hash(), c.canonical_hash());
    }

    #[test]
    fn rejects_bad_probabilities() {
        let mut c = SessionConfig::reference(100, 1);
        c.alice_probs.control = 0.2333333333333333;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let mut c = SessionConfig::reference(100, 1);
        c.bob_probs = BobProbs { e0: 1.2, e1: -0.2, edt: 0.0 };
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let mut c = SessionConfig::reference(100, 1);
        c.n_slots = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        let mut v: serde_json::Value = serde_json::from_str(&SessionConfig::reference(10, 0).to_json()).unwrap();
        v["channel"]["lenght_m"] = 5.0.into();
        assert!(SessionConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn regime_violations_are_flagged() {
        let mut c = SessionConfig::reference(10, 0);
        c.source.tau_pi = 2e-10;
        assert!(matches!(c.validate(), Err(Error::RegimeViolation(_))));
        let mut c = SessionConfig::reference(10, 0);
        c.detector.tau_det = 2e-8;
        assert!(matches!(c.validate(), Err(Error::RegimeViolation(_))));
    }

    #[test]
    fn gaussian_model_needs_a_wide_window() {
        let mut c = SessionConfig::reference(10, 0);
        c.state_model = ModelKind::Gaussian;
        c.detector.window = 1e-6;
        assert!(c.validate().is_err());
        c.detector.window = 2e-6;
        c.validate().unwrap();
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
