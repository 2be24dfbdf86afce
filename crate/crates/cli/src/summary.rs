use serde::{Deserialize, Serialize};

use freqkey::protocol::{GroupedView, SessionConfig, SiftedKey, Transcript};
use freqkey::source::RegimeCheck;
use freqkey::stats::DetectionReport;

pub const SCHEMA: &str = "freqkey-summary/1";

/// Contents of `summary.json`. Only fields that are a function of the
/// configuration appear here, so reruns reproduce the file byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub schema: String,
    pub command: String,
    /// SHA-256 of the configuration file as read from disk.
    pub config_sha256: String,
    pub seed: u64,
    /// Effective configuration after command-line overrides.
    pub config: SessionConfig,
    pub strategy: String,
    pub n_slots: u64,
    pub lost: u64,
    pub disclosed_control: u64,
    pub disclosed_info: u64,
    pub key_length: u64,
    pub key_fraction: f64,
    pub key_mismatches: u64,
    /// `None` when the key is empty.
    pub key_match_rate: Option<f64>,
    pub regime: Vec<RegimeCheck>,
    pub report: DetectionReport,
}

pub struct SummaryInput<'a> {
    pub command: &'a str,
    pub config_sha256: &'a str,
    pub config: &'a SessionConfig,
    pub transcript: &'a Transcript,
    pub grouped: &'a GroupedView,
    pub keys: &'a (SiftedKey, SiftedKey),
    pub regime: Vec<RegimeCheck>,
    pub report: DetectionReport,
}

impl RunSummary {
    pub fn build(input: SummaryInput<'_>) -> Self {
        let (alice, bob) = input.keys;
        let key_length = alice.len() as u64;
        let mismatches = alice.mismatches(bob) as u64;
        let n = input.transcript.len() as u64;
        Self {
            schema: SCHEMA.to_string(),
            command: input.command.to_string(),
            config_sha256: input.config_sha256.to_string(),
            seed: input.config.seed,
            config: input.config.clone(),
            strategy: input.transcript.strategy.name().to_string(),
            n_slots: n,
            lost: input.transcript.slots.iter().filter(|e| e.lost).count() as u64,
            disclosed_control: input.grouped.public.disclosed_control.len() as u64,
            disclosed_info: input.grouped.public.disclosed_info.len() as u64,
            key_length,
            key_fraction: key_length as f64 / n as f64,
            key_mismatches: mismatches,
            key_match_rate: (key_length > 0).then(|| 1.0 - mismatches as f64 / key_length as f64),
            regime: input.regime,
            report: input.report,
        }
    }
}
