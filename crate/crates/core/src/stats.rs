//! Goodness-of-fit and counting tests, and the eavesdropping decision.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, Discrete};

use crate::error::{Error, Result};
use crate::measurement::arrival_cdf;
use crate::protocol::{AliceChoice, GroupedView, SessionConfig, SettingKind, Transcript};

/// `P(K <= x)` for the limiting Kolmogorov distribution.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1.0 {
        // theta-function form converges fast for small x
        let c = std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let s: f64 = (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        return ((2.0 * std::f64::consts::PI).sqrt() / x * s).clamp(0.0, 1.0);
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * (k * k) as f64 * x * x).exp()
        })
        .sum();
    (1.0 - 2.0 * s).clamp(0.0, 1.0)
}

/// `x` with `kolmogorov_cdf(x) = p`, by bisection.
pub fn kolmogorov_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Critical sup-distance for `n` samples at level `alpha`, with the
/// `sqrt(n) + 0.12 + 0.11 / sqrt(n)` small-sample scaling.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    let rn = (n as f64).sqrt();
    kolmogorov_quantile(1.0 - alpha) / (rn + 0.12 + 0.11 / rn)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub n: usize,
    pub d_statistic: f64,
    pub critical: f64,
    pub alpha: f64,
    pub reject: bool,
}

impl KsResult {
    fn new(n: usize, d: f64, alpha: f64) -> Self {
        let critical = ks_critical(n, alpha);
        Self {
            n,
            d_statistic: d,
            critical,
            alpha,
            reject: d > critical,
        }
    }
}

/// Sup-distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
        .clamp(0.0, 1.0)
}

/// `ks_test`: one-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, alpha: f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(KsResult::new(samples.len(), ks_statistic(samples, cdf), alpha))
}

/// KS test for detector-quantized data.
///
/// `bins[i]` is the index of the resolution bin `[k tau, (k + 1) tau)` that
/// holds sample `i`. Both CDFs are step functions jumping at bin ends, so the
/// sup-distance is taken over every bin end spanned by the data and by the
/// support of `cdf`. The continuous critical value is conservative here.
pub fn binned_ks_test<F: Fn(f64) -> f64>(
    bins: &[i64],
    tau: f64,
    support: (f64, f64),
    cdf: F,
    alpha: f64,
) -> Result<KsResult> {
    if bins.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = bins.to_vec();
    sorted.sort_unstable();
    let first = sorted[0].min((support.0 / tau).floor() as i64);
    let last = sorted[sorted.len() - 1].max((support.1 / tau).ceil() as i64);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut seen = 0usize;
    for k in first..=last {
        while seen < sorted.len() && sorted[seen] <= k {
            seen += 1;
        }
        let empirical = seen as f64 / n;
        d = d.max((empirical - cdf((k + 1) as f64 * tau)).abs());
    }
    Ok(KsResult::new(sorted.len(), d.min(1.0), alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Accept,
    Reject,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountTest {
    pub successes: u64,
    pub trials: u64,
    pub expected_p: f64,
    pub p_value: Option<f64>,
    pub alpha: f64,
    pub outcome: Outcome,
}

impl CountTest {
    fn from_p_value(successes: u64, trials: u64, expected_p: f64, p_value: Option<f64>, alpha: f64) -> Self {
        let outcome = match p_value {
            None => Outcome::Inconclusive,
            Some(p) if p < alpha => Outcome::Reject,
            Some(_) => Outcome::Accept,
        };
        Self {
            successes,
            trials,
            expected_p,
            p_value,
            alpha,
            outcome,
        }
    }
}

/// Two-sided exact binomial p-value: total mass of outcomes no more likely than `k`.
pub fn binomial_two_sided(k: u64, n: u64, p: f64) -> f64 {
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let dist = Binomial::new(p, n).expect("p in (0, 1)");
    let observed = dist.ln_pmf(k);
    // relative slack so ties are not lost to rounding
    let cutoff = observed + 1e-7_f64.ln_1p();
    (0..=n)
        .map(|j| dist.ln_pmf(j))
        .filter(|&l| l <= cutoff)
        .map(f64::exp)
        .sum::<f64>()
        .min(1.0)
}

/// Upper-tail binomial p-value `P(K >= k)`.
pub fn binomial_upper(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let dist = Binomial::new(p, n).expect("p in (0, 1)");
    (k..=n).map(|j| dist.pmf(j)).sum::<f64>().min(1.0)
}

/// Exact two-sided binomial test of `k` successes in `n` trials.
pub fn binomial_test(k: u64, n: u64, p: f64, alpha: f64) -> CountTest {
    let p_value = (n > 0).then(|| binomial_two_sided(k, n, p));
    CountTest::from_p_value(k, n, p, p_value, alpha)
}

/// `ratio_test`: `clicks0` out of `clicks0 + clicks1` against
/// `p = r / (1 + r)`, `r` the expected `|f0|^2 / |f1|^2`.
pub fn ratio_test(clicks0: u64, clicks1: u64, expected_ratio: f64, alpha: f64) -> CountTest {
    let p = if expected_ratio.is_infinite() {
        1.0
    } else {
        expected_ratio / (1.0 + expected_ratio)
    };
    binomial_test(clicks0, clicks0 + clicks1, p, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestDetail {
    Ks(KsResult),
    Count(CountTest),
    Empty,
}

/// One component of the verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTest {
    pub name: String,
    pub outcome: Outcome,
    pub detail: TestDetail,
}

impl ComponentTest {
    fn ks(name: &str, result: Result<KsResult>) -> Self {
        match result {
            Ok(r) => Self {
                name: name.to_string(),
                outcome: if r.reject { Outcome::Reject } else { Outcome::Accept },
                detail: TestDetail::Ks(r),
            },
            Err(_) => Self::empty(name),
        }
    }

    fn count(name: &str, t: CountTest) -> Self {
        Self {
            name: name.to_string(),
            outcome: t.outcome,
            detail: TestDetail::Count(t),
        }
    }

    fn empty(name: &str) -> Self {
        Self {
            name: name.to_string(),
            outcome: Outcome::Inconclusive,
            detail: TestDetail::Empty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Clean,
    Eavesdropping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub tests: Vec<ComponentTest>,
    pub verdict: Verdict,
}

impl DetectionReport {
    pub fn from_tests(tests: Vec<ComponentTest>) -> Self {
        let verdict = if tests.iter().any(|t| t.outcome == Outcome::Reject) {
            Verdict::Eavesdropping
        } else {
            Verdict::Clean
        };
        Self { tests, verdict }
    }

    pub fn test(&self, name: &str) -> Option<&ComponentTest> {
        self.tests.iter().find(|t| t.name == name)
    }
}

pub const CONTROL_TIME: &str = "control-time";
pub const CONTROL_RATIO: &str = "control-ratio";
pub const INFO_MATCHING: &str = "info-matching";
pub const INFO_OPPOSITE: &str = "info-opposite";
pub const INFO_TIME: &str = "info-time";

/// Resolution-bin indices of the clicks in `slots`, counted from each slot's start.
fn click_bins(transcript: &Transcript, slots: &[u64], tau: f64) -> Vec<i64> {
    slots
        .iter()
        .filter_map(|&s| {
            let entry = &transcript.slots[s as usize];
            let t = entry.record.click_time?;
            Some(((t - entry.plan.slot_start) / tau).round() as i64)
        })
        .collect()
}

/// `verify_session`: every check Bob can run on the disclosed slots.
///
/// The time tests compare against the nominal states (emitted at the slot
/// start, delayed by the nominal fiber length); the counting tests use the
/// configured transmittance and dark-count rate as the expected click rates.
pub fn verify_session(transcript: &Transcript, grouped: &GroupedView, config: &SessionConfig) -> Result<DetectionReport> {
    let factory = config.factory()?;
    let alpha = config.alpha;
    let tau = config.detector.tau_det;
    let delay = config.channel.delay();
    let prefactors = config.detector.prefactors;
    let dark = config.detector.dark_count_prob;
    let eta = config.channel.transmittance;
    let clicks = |slots: &[u64]| {
        slots
            .iter()
            .filter(|&&s| transcript.slots[s as usize].record.clicked)
            .count() as u64
    };

    let mut tests = Vec::with_capacity(5);

    let control = factory.control(0.0)?.delayed(delay);
    let cdf = arrival_cdf(&control, prefactors);
    let bins = click_bins(transcript, grouped.slots(AliceChoice::Control, SettingKind::Edt), tau);
    tests.push(ComponentTest::ks(
        CONTROL_TIME,
        binned_ks_test(&bins, tau, cdf.support(), |x| cdf.cdf(x), alpha),
    ));

    let c0 = clicks(grouped.slots(AliceChoice::Control, SettingKind::E0));
    let c1 = clicks(grouped.slots(AliceChoice::Control, SettingKind::E1));
    let [f0, f1] = factory.control;
    let ratio = f0.norm_sqr() / f1.norm_sqr();
    tests.push(if c0 + c1 == 0 {
        ComponentTest::empty(CONTROL_RATIO)
    } else {
        ComponentTest::count(CONTROL_RATIO, ratio_test(c0, c1, ratio, alpha))
    });

    let (mut hit, mut tried, mut wrong, mut wrong_tried) = (0, 0, 0, 0);
    let mut info_bins = [Vec::new(), Vec::new()];
    for bit in [0u8, 1] {
        let choice = AliceChoice::info(bit);
        let (matching, opposite) = if bit == 0 {
            (SettingKind::E0, SettingKind::E1)
        } else {
            (SettingKind::E1, SettingKind::E0)
        };
        hit += clicks(grouped.slots(choice, matching));
        tried += grouped.slots(choice, matching).len() as u64;
        wrong += clicks(grouped.slots(choice, opposite));
        wrong_tried += grouped.slots(choice, opposite).len() as u64;
        info_bins[usize::from(bit)] = click_bins(transcript, grouped.slots(choice, SettingKind::Edt), tau);
    }
    let expected_hit = eta + (1.0 - eta) * dark;
    tests.push(ComponentTest::count(INFO_MATCHING, binomial_test(hit, tried, expected_hit, alpha)));
    let p_wrong = (wrong_tried > 0).then(|| binomial_upper(wrong, wrong_tried, dark));
    tests.push(ComponentTest::count(
        INFO_OPPOSITE,
        CountTest::from_p_value(wrong, wrong_tried, dark, p_wrong, alpha),
    ));

    // the two information states share one arrival law up to the carrier frequency
    let info = factory.info(0, 0.0)?.delayed(delay);
    let cdf = arrival_cdf(&info, prefactors);
    let bins: Vec<i64> = info_bins.concat();
    tests.push(ComponentTest::ks(
        INFO_TIME,
        binned_ks_test(&bins, tau, cdf.support(), |x| cdf.cdf(x), alpha),
    ));

    Ok(DetectionReport::from_tests(tests))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn kolmogorov_quantiles_match_tables() {
        assert!((kolmogorov_quantile(0.95) - 1.358_098_8).abs() < 1e-6);
        assert!((kolmogorov_quantile(0.99) - 1.627_624_4).abs() < 1e-6);
        // both series agree where they switch over
        let a = 1.0 - 2.0 * (1..100).map(|k| (-1f64).powi(k - 1) * (-2.0 * (k * k) as f64).exp()).sum::<f64>();
        assert!((kolmogorov_cdf(1.0) - a).abs() < 1e-12);
        assert!((kolmogorov_cdf(0.999_999_9) - a).abs() < 1e-6);
    }

    #[test]
    fn large_n_critical_value() {
        let n = 100_000_000;
        assert!((ks_critical(n, 0.05) * (n as f64).sqrt() - 1.358).abs() < 1e-3);
    }

    #[test]
    fn single_sample_at_median() {
        let r = ks_test(&[0.5], |x| x, 0.05).unwrap();
        assert_eq!(r.d_statistic, 0.5);
        assert!(!r.reject);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert_eq!(ks_test(&[], |x| x, 0.05), Err(Error::EmptySample));
        assert_eq!(binned_ks_test(&[], 1.0, (0.0, 1.0), |x| x, 0.05), Err(Error::EmptySample));
    }

    #[test]
    fn ks_rejects_a_shifted_law() {
        let mut rng = seeded(7);
        let xs: Vec<f64> = (0..2000).map(|_| rng.random::<f64>().powi(2)).collect();
        assert!(ks_test(&xs, |x: f64| x.clamp(0.0, 1.0), 0.01).unwrap().reject);
        assert!(!ks_test(&xs, |x: f64| x.clamp(0.0, 1.0).sqrt(), 0.01).unwrap().reject);
    }

    #[test]
    fn binned_ks_on_exact_bins() {
        // ten equal bins, one sample each: zero distance
        let bins: Vec<i64> = (0..10).collect();
        let r = binned_ks_test(&bins, 0.1, (0.0, 1.0), |x: f64| x.clamp(0.0, 1.0), 0.05).unwrap();
        assert!(r.d_statistic < 1e-12);
        let skew = vec![0i64; 10];
        let r = binned_ks_test(&skew, 0.1, (0.0, 1.0), |x: f64| x.clamp(0.0, 1.0), 0.05).unwrap();
        assert!((r.d_statistic - 0.9).abs() < 1e-12);
        assert!(r.reject);
    }

    #[test]
    fn ratio_test_examples() {
        assert_eq!(ratio_test(500, 500, 1.0, 0.05).outcome, Outcome::Accept);
        let t = ratio_test(900, 100, 1.0, 0.05);
        assert_eq!(t.outcome, Outcome::Reject);
        assert!(t.p_value.unwrap() < 1e-100);
        assert_eq!(ratio_test(0, 0, 1.0, 0.05).outcome, Outcome::Inconclusive);
    }

    #[test]
    fn binomial_p_values() {
        // symmetric case: P(K <= 2) + P(K >= 8) for n = 10, p = 1/2
        let tail = (1.0 + 10.0 + 45.0) / 1024.0;
        assert!((binomial_two_sided(2, 10, 0.5) - 2.0 * tail).abs() < 1e-12);
        assert!((binomial_upper(8, 10, 0.5) - tail).abs() < 1e-12);
        assert_eq!(binomial_two_sided(10, 10, 1.0), 1.0);
        assert_eq!(binomial_two_sided(9, 10, 1.0), 0.0);
        assert_eq!(binomial_upper(1, 10, 0.0), 0.0);
    }

    #[test]
    fn uniform_versus_fringe_distance_is_one_over_two_pi() {
        // CDF of (1 + cos x) / 2pi on one period against the uniform CDF
        let fringe = |u: f64| u + (std::f64::consts::TAU * u).sin() / std::f64::consts::TAU;
        let d = (0..=100_000)
            .map(|i| {
                let u = i as f64 / 100_000.0;
                (fringe(u) - u).abs()
            })
            .fold(0.0, f64::max);
        assert!((d - 1.0 / std::f64::consts::TAU).abs() < 1e-9);
    }
}
