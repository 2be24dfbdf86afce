//! Command-line front end for the `freqkey` simulator.

pub mod output;
pub mod summary;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use freqkey::adversary::AttackStrategy;
use freqkey::measurement::{arrival_cdf, gaussian_time_density, sample_click_time, time_density, Prefactors};
use freqkey::protocol::{disclose_and_group, run_session, sift, SessionConfig};
use freqkey::quadrature::integrate_panels;
use freqkey::rng::seeded;
use freqkey::source::{emit_packet, filter_packet, timing_regime_check, FilterMode, SourceParams, SpectrumShape};
use freqkey::states::{CarrierFactory, FrequencyQubit, StateModel};
use freqkey::stats::{ks_test, Verdict};
use freqkey::{Error, Execution};

use summary::{RunSummary, SummaryInput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_REGIME: i32 = 3;
pub const EXIT_POWER: i32 = 4;

/// Number of rows in `curves.csv`.
pub const CURVE_POINTS: usize = 10_000;

#[derive(Debug, Parser)]
#[command(name = "freqkey", version, about = "Frequency-state QKD session simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run clean sessions and write transcript.csv and summary.json.
    Simulate(RunArgs),
    /// Run sessions under an eavesdropper and write summary.json.
    Attack {
        #[command(flatten)]
        run: RunArgs,
        /// none, intercept-freq, intercept-time, blind-resend-{zero,one,control}
        #[arg(long)]
        strategy: String,
    },
    /// Write analytic detection densities to curves.csv.
    Curves(CommonArgs),
    /// Quick numerical self-checks.
    Selftest,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; FREQKEY_OUT takes precedence.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the significance level in the config file.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Independent sessions with seeds `seed + i`, written to `run-<i>/`.
    #[arg(long, default_value_t = 1)]
    pub repeat: u64,
    /// Also write unquantized click times to click_times_raw.csv.
    #[arg(long)]
    pub diagnostics: bool,
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::RegimeViolation(_) => EXIT_REGIME,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn out_dir(args: &CommonArgs) -> PathBuf {
    std::env::var_os("FREQKEY_OUT")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| args.out.clone())
}

/// Read and validate the config, returning it with the SHA-256 of the file bytes.
pub fn load_config(path: &Path) -> CliResult<(SessionConfig, String)> {
    let bytes = fs::read(path).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", path.display()),
    })?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", path.display()),
    })?;
    let config = SessionConfig::from_json(&text)?;
    let hash = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    Ok((config, hash))
}

fn apply_overrides(mut config: SessionConfig, run: &RunArgs) -> CliResult<SessionConfig> {
    if let Some(seed) = run.seed {
        config.seed = seed;
    }
    if let Some(alpha) = run.alpha {
        config.alpha = alpha;
    }
    config.validate()?;
    Ok(config)
}

struct SessionOutput {
    summary: RunSummary,
    transcript_csv: Vec<u8>,
    raw_csv: Option<Vec<u8>>,
}

fn execute(
    command: &str,
    config: &SessionConfig,
    hash: &str,
    strategy: AttackStrategy,
    diagnostics: bool,
) -> freqkey::Result<SessionOutput> {
    let transcript = run_session(config, strategy)?;
    let grouped = disclose_and_group(&transcript, config);
    let report = freqkey::stats::verify_session(&transcript, &grouped, config)?;
    let keys = sift(&transcript, &grouped);
    let basis = config.basis()?;
    let regime = timing_regime_check(&config.source, config.detector.tau_det, basis.splitting().abs());
    let mut transcript_csv = Vec::new();
    output::write_transcript(&mut transcript_csv, &transcript, &grouped, &keys.0).expect("in-memory write");
    let raw_csv = diagnostics.then(|| {
        let mut buf = Vec::new();
        output::write_raw_times(&mut buf, &transcript).expect("in-memory write");
        buf
    });
    let summary = RunSummary::build(SummaryInput {
        command,
        config_sha256: hash,
        config,
        transcript: &transcript,
        grouped: &grouped,
        keys: &keys,
        regime,
        report,
    });
    Ok(SessionOutput {
        summary,
        transcript_csv,
        raw_csv,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

fn run_sessions(command: &str, run: &RunArgs, strategy: AttackStrategy, write_transcript: bool) -> CliResult<Vec<RunSummary>> {
    let (base, hash) = load_config(&run.common.config)?;
    let base = apply_overrides(base, run)?;
    let repeat = run.repeat.max(1);
    let started = Instant::now();
    let configs: Vec<SessionConfig> = (0..repeat)
        .map(|i| SessionConfig {
            seed: base.seed.wrapping_add(i),
            ..base.clone()
        })
        .collect();
    let outputs: Vec<freqkey::Result<SessionOutput>> = Execution::default()
        .map_slice(&configs, |c| execute(command, c, &hash, strategy, run.diagnostics));

    let root = out_dir(&run.common);
    let mut summaries = Vec::with_capacity(outputs.len());
    for (i, out) in outputs.into_iter().enumerate() {
        let out = out?;
        let dir = if repeat == 1 { root.clone() } else { root.join(format!("run-{i:04}")) };
        fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
        if write_transcript {
            write_file(&dir.join("transcript.csv"), &out.transcript_csv)?;
        }
        if let Some(raw) = &out.raw_csv {
            write_file(&dir.join("click_times_raw.csv"), raw)?;
        }
        let json = serde_json::to_string_pretty(&out.summary).expect("summary serializes") + "\n";
        write_file(&dir.join("summary.json"), json.as_bytes())?;
        summaries.push(out.summary);
    }
    // kept out of summary.json so reruns stay byte-identical
    eprintln!("wall-clock: {:.3} s for {repeat} session(s)", started.elapsed().as_secs_f64());
    Ok(summaries)
}

fn report_line(s: &RunSummary) {
    println!(
        "seed={} strategy={} key_length={} key_fraction={:.5} mismatches={} verdict={:?}",
        s.seed, s.strategy, s.key_length, s.key_fraction, s.key_mismatches, s.report.verdict
    );
}

pub fn cmd_simulate(run: &RunArgs) -> CliResult<i32> {
    for s in run_sessions("simulate", run, AttackStrategy::None, true)? {
        report_line(&s);
    }
    Ok(EXIT_OK)
}

pub fn cmd_attack(run: &RunArgs, strategy: &str) -> CliResult<i32> {
    let strategy: AttackStrategy = strategy.parse()?;
    let summaries = run_sessions("attack", run, strategy, false)?;
    let mut code = EXIT_OK;
    for s in &summaries {
        report_line(s);
        if strategy.is_active() && s.report.verdict == Verdict::Clean {
            code = EXIT_POWER;
        }
    }
    Ok(code)
}

/// Rows of `curves.csv`: the densities on `CURVE_POINTS` times spanning `+-8 / sigma`.
pub fn curve_rows(config: &SessionConfig) -> freqkey::Result<Vec<[f64; 5]>> {
    let basis = config.basis()?;
    let [f0, f1] = config.control_amplitudes;
    let info = FrequencyQubit::info(0, basis);
    let control = FrequencyQubit::control(f0, f1, 0.0, basis)?;
    let sigma = config.source.sigma;
    let gauss = CarrierFactory::new(basis, config.control_amplitudes, StateModel::Gaussian { sigma })?;
    let as_gaussian = |c| match c {
        freqkey::states::Carrier::Gaussian(g) => g,
        freqkey::states::Carrier::Mono(_) => unreachable!("factory is Gaussian"),
    };
    let g_info = as_gaussian(gauss.info(0, 0.0)?);
    let g_control = as_gaussian(gauss.control(0.0)?);
    let half = 8.0 / sigma;
    let step = 2.0 * half / (CURVE_POINTS - 1) as f64;
    Ok((0..CURVE_POINTS)
        .map(|i| {
            let t = -half + step * i as f64;
            [
                t,
                time_density(&info, t),
                time_density(&control, t),
                gaussian_time_density(&g_info, t, 0.0, 1.0),
                gaussian_time_density(&g_control, t, 0.0, 1.0),
            ]
        })
        .collect())
}

pub fn cmd_curves(args: &CommonArgs) -> CliResult<i32> {
    let (config, _) = load_config(&args.config)?;
    let rows = curve_rows(&config)?;
    let dir = out_dir(args);
    fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
    let path = dir.join("curves.csv");
    let file = File::create(&path).map_err(|e| Failure::io(&path, e))?;
    output::write_curves(BufWriter::new(file), &rows).map_err(|e| Failure::io(&path, e))?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(EXIT_OK)
}

/// Fast checks of the numerical core; returns `(name, passed, detail)`.
pub fn selftest_checks() -> Vec<(&'static str, bool, String)> {
    let mut checks = Vec::new();
    let params = SourceParams::reference();
    let regime = timing_regime_check(&params, 1e-9, 1e8);
    checks.push((
        "timing regime",
        regime.iter().all(|c| c.satisfied),
        format!("{:?}", regime.iter().map(|c| c.ratio).collect::<Vec<_>>()),
    ));

    let basis = params.basis().expect("reference basis");
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let control = FrequencyQubit::control(h, h, 0.0, basis).expect("normalized");
    let period = basis.period();
    let mass = integrate_panels(&|t| time_density(&control, t), 0.0, period, 16, 1e-12);
    checks.push(("control density mass", (mass - 1.0).abs() < 1e-6, format!("{mass:.12}")));

    let factory = CarrierFactory::new(basis, [h, h], StateModel::Gaussian { sigma: params.sigma }).expect("factory");
    let g = factory.control(0.0).expect("gaussian control");
    let cdf = arrival_cdf(&g, Prefactors::Off);
    let mass = cdf.total_mass();
    checks.push(("gaussian density mass", (mass - 1.0).abs() < 1e-6, format!("{mass:.12}")));

    let flat = SourceParams {
        spectrum: SpectrumShape::Flat,
        ..params
    };
    let herald = emit_packet(0.0, &flat)
        .and_then(|p| filter_packet(&p, FilterMode::Zero, &flat))
        .map(|o| o.herald_prob)
        .unwrap_or(f64::NAN);
    checks.push(("heralding probability", (herald / 1e-3 - 1.0).abs() < 0.05, format!("{herald:.6e}")));

    let carrier = freqkey::states::Carrier::Mono(control);
    let mut rng = seeded(1);
    let samples: Vec<f64> = (0..10_000).map(|_| sample_click_time(&carrier, Prefactors::Off, &mut rng)).collect();
    let cdf = arrival_cdf(&carrier, Prefactors::Off);
    let ks = ks_test(&samples, |x| cdf.cdf(x), 0.001).expect("non-empty");
    checks.push(("sampler KS", !ks.reject, format!("D={:.5} crit={:.5}", ks.d_statistic, ks.critical)));
    checks
}

pub fn cmd_selftest() -> i32 {
    let checks = selftest_checks();
    for (name, ok, detail) in &checks {
        println!("{} {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
    }
    if checks.iter().all(|c| c.1) {
        EXIT_OK
    } else {
        EXIT_IO
    }
}

pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Simulate(run) => cmd_simulate(run),
        Command::Attack { run, strategy } => cmd_attack(run, strategy),
        Command::Curves(args) => cmd_curves(args),
        Command::Selftest => Ok(cmd_selftest()),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
