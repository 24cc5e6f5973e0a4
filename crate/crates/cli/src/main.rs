//! Command-line interface: verification and rate reports for the
//! cascaded-SPDC hyperentanglement simulator.
//!
//! Exit codes: 0 = all checks passed, 1 = a verification or statistical
//! check failed, 2 = invalid input.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use report::Format;

#[derive(Parser)]
#[command(
    name = "spdc-cascade",
    version,
    about = "Simulate cascaded-SPDC hyperentanglement circuits and compute generation rates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a cascade, simulate it symbolically, and compare against the
    /// closed-form target state.
    Verify(VerifyArgs),
    /// Closed-form generation rate, pair distribution, and pair-ratio
    /// report.
    Rates(RatesArgs),
    /// Pair-count distribution of the cascaded source.
    Pairs(RatesArgs),
    /// Rate table over mean photon number and photon count.
    Sweep(SweepArgs),
    /// Closed form vs brute-force enumeration for one pulse query.
    Oracle(OracleArgs),
    /// Seeded Monte Carlo estimate of the generation rate.
    Montecarlo(MonteCarloArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON config file with default parameter values (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Encoding scheme: pol-spatial or pol-time-bin.
    #[arg(long)]
    scheme: Option<String>,
    /// Photon count of the target state.
    #[arg(long)]
    m: Option<u32>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long)]
    m: Option<u32>,
    /// Mean photon number per pulse.
    #[arg(long)]
    mu: Option<f64>,
    /// Per-crystal splitting probability.
    #[arg(long)]
    ps: Option<f64>,
    /// Laser repetition rate in Hz.
    #[arg(long = "rep-hz")]
    rep_hz: Option<f64>,
    /// Largest pair count reported explicitly.
    #[arg(long = "r-max")]
    r_max: Option<u32>,
    /// Single pair count to highlight with its exact Pr(m,r).
    #[arg(long)]
    r: Option<u32>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated mean photon numbers, e.g. 0.5,1,2,4.
    #[arg(long)]
    mu: Option<String>,
    /// Inclusive photon-count range, e.g. 3..8 (or a single value).
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    ps: Option<f64>,
    #[arg(long = "rep-hz")]
    rep_hz: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct OracleArgs {
    /// Photons in the pulse.
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    ps: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct MonteCarloArgs {
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    ps: Option<f64>,
    #[arg(long = "rep-hz")]
    rep_hz: Option<f64>,
    /// Number of pulses to sample.
    #[arg(long)]
    trials: Option<u64>,
    /// RNG seed (echoed in the report).
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: CommonArgs,
}

/// Values a JSON config file may provide; command-line flags win.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct FileConfig {
    scheme: Option<String>,
    m: Option<serde_json::Value>,
    mu: Option<serde_json::Value>,
    ps: Option<f64>,
    rep_hz: Option<f64>,
    n: Option<u32>,
    r: Option<u32>,
    trials: Option<u64>,
    seed: Option<u64>,
    r_max: Option<u32>,
    format: Option<Format>,
}

impl FileConfig {
    fn load(path: Option<&PathBuf>) -> Result<FileConfig, String> {
        match path {
            None => Ok(FileConfig::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                serde_json::from_str(&text)
                    .map_err(|e| format!("bad config {}: {e}", path.display()))
            }
        }
    }

    fn m_u32(&self) -> Result<Option<u32>, String> {
        match &self.m {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|m| Some(m as u32))
                .ok_or_else(|| format!("config field 'm' must be an integer, got {v}")),
        }
    }

    fn mu_f64(&self) -> Result<Option<f64>, String> {
        match &self.mu {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| format!("config field 'mu' must be a number, got {v}")),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report_passed) => {
            if report_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    let (report, common) = match cli.command {
        Command::Verify(args) => {
            let config = FileConfig::load(args.common.config.as_ref())?;
            let scheme = args
                .scheme
                .or(config.scheme.clone())
                .ok_or("missing --scheme")?;
            let m = args.m.or(config.m_u32()?).ok_or("missing --m")?;
            (commands::verify(&scheme, m)?, (args.common, config))
        }
        Command::Rates(args) => {
            let config = FileConfig::load(args.common.config.as_ref())?;
            let params = rates_params(&args, &config)?;
            (commands::rates(&params)?, (args.common, config))
        }
        Command::Pairs(args) => {
            let config = FileConfig::load(args.common.config.as_ref())?;
            let params = rates_params(&args, &config)?;
            (commands::pairs(&params)?, (args.common, config))
        }
        Command::Sweep(args) => {
            let config = FileConfig::load(args.common.config.as_ref())?;
            let mus = parse_mu_list(args.mu.as_deref().unwrap_or("0.5,1,2,4"))?;
            let (m_lo, m_hi) = parse_m_range(args.m.as_deref().unwrap_or("3..8"))?;
            let ps = args.ps.or(config.ps).unwrap_or(7.6e-6);
            let rep_hz = args.rep_hz.or(config.rep_hz).unwrap_or(1e9);
            (
                commands::sweep(&mus, m_lo, m_hi, ps, rep_hz)?,
                (args.common, config),
            )
        }
        Command::Oracle(args) => {
            let config = FileConfig::load(args.common.config.as_ref())?;
            let n = args.n.or(config.n).ok_or("missing --n")?;
            let m = args.m.or(config.m_u32()?).unwrap_or(3);
            let ps = args.ps.or(config.ps).ok_or("missing --ps")?;
            (commands::oracle(n, m, ps)?, (args.common, config))
        }
        Command::Montecarlo(args) => {
            let config = FileConfig::load(args.common.config.as_ref())?;
            let m = args.m.or(config.m_u32()?).unwrap_or(3);
            let mu = args.mu.or(config.mu_f64()?).unwrap_or(1.0);
            let ps = args.ps.or(config.ps).unwrap_or(7.6e-6);
            let rep_hz = args.rep_hz.or(config.rep_hz).unwrap_or(1e9);
            let trials = args.trials.or(config.trials).unwrap_or(1_000_000);
            let seed = args.seed.or(config.seed).unwrap_or(0);
            (
                commands::montecarlo(m, mu, ps, rep_hz, trials, seed)?,
                (args.common, config),
            )
        }
    };

    let (common, config) = common;
    let format = common.format.or(config.format).unwrap_or_default();
    report
        .emit(format, common.out.as_deref())
        .map_err(|e| format!("cannot write report: {e}"))?;
    Ok(report.all_passed())
}

struct RatesParams {
    m: u32,
    mu: f64,
    ps: f64,
    rep_hz: f64,
    r_max: u32,
    r: Option<u32>,
}

fn rates_params(args: &RatesArgs, config: &FileConfig) -> Result<RatesParams, String> {
    Ok(RatesParams {
        m: args.m.or(config.m_u32()?).unwrap_or(3),
        mu: args.mu.or(config.mu_f64()?).unwrap_or(1.0),
        ps: args.ps.or(config.ps).unwrap_or(7.6e-6),
        rep_hz: args.rep_hz.or(config.rep_hz).unwrap_or(1e9),
        r_max: args.r_max.or(config.r_max).unwrap_or(5),
        r: args.r.or(config.r),
    })
}

fn parse_mu_list(text: &str) -> Result<Vec<f64>, String> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|part| part.trim().parse()).collect();
    let values = values.map_err(|e| format!("bad --mu list '{text}': {e}"))?;
    if values.is_empty() {
        return Err("empty --mu list".into());
    }
    Ok(values)
}

fn parse_m_range(text: &str) -> Result<(u32, u32), String> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|e| format!("bad --m range '{text}': {e}"))?;
        let hi: u32 = hi.trim().parse().map_err(|e| format!("bad --m range '{text}': {e}"))?;
        if lo < 2 || hi < lo {
            return Err(format!("bad --m range '{text}': need 2 ≤ lo ≤ hi"));
        }
        Ok((lo, hi))
    } else {
        let m: u32 = text.trim().parse().map_err(|e| format!("bad --m '{text}': {e}"))?;
        Ok((m, m))
    }
}
