mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cogbeam::experiments::{
    read_channel_file, run_access_prob, run_selftest, run_sweep, AccessSpec, AxisUnit, SnrPattern, SolverKind,
    SolutionRecord, SweepAxis, SweepSpec,
};
use cogbeam::{build_derived, solve_nfb, solve_zfb, BeamformingSolution, Error, ScenarioConfig};

use config::{ConfigFile, List};

/// Environment variable holding the default RNG seed.
const SEED_ENV: &str = "COGBEAM_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{failed} self-test check(s) failed")]
    SelftestFailed { failed: usize },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(e) => match e {
                Error::Config(_) | Error::Parse { .. } | Error::Rank { .. } => 2,
                Error::Infeasible { .. } | Error::InsufficientNullSpace { .. } | Error::OracleNoFeasiblePoint { .. } => 3,
                Error::NumericalFailure(_) | Error::Tolerance(_) => 4,
                Error::Io(_) | Error::Json(_) => 1,
            },
            CliError::Io(_) => 1,
            CliError::SelftestFailed { .. } => 4,
        }
    }
}

/// Transmit beamforming for an interference-capped secondary MIMO link.
///
/// Settings come from flags, then from the `--config` file, then from
/// built-in defaults. Scenario scalars (`--xi`, `--snr`, `--primary-power`)
/// are linear; `--unit db` applies to sweep axis values only.
#[derive(Debug, Parser)]
#[command(name = "cogbeam", version, about)]
struct Cli {
    /// `key = value` file; keys are long flag names.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(flatten)]
    scenario: ScenarioArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Secondary transmit antennas.
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Secondary receive antennas.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Primary transmit antennas.
    #[arg(long, global = true)]
    p: Option<usize>,
    /// Primary receive antennas.
    #[arg(long, global = true)]
    q: Option<usize>,
    /// Data streams.
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true)]
    primary_power: Option<f64>,
    /// Interference cap.
    #[arg(long, global = true)]
    xi: Option<f64>,
    /// Per-stream SNR targets; a single value applies to every stream.
    #[arg(long, global = true)]
    snr: Option<List<f64>>,
    /// RNG seed (default from $COGBEAM_SEED, else 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Probability that the cap is achievable, per stream count.
    AccessProb {
        /// Interference caps, comma separated.
        #[arg(long = "xi-values")]
        values: Option<List<f64>>,
        #[arg(long)]
        unit: Option<AxisUnit>,
        /// Stream counts, comma separated.
        #[arg(long)]
        streams: Option<List<usize>>,
        #[arg(long)]
        trials: Option<usize>,
        /// CSV destination (stdout if absent).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Monte-Carlo sweep of mean transmit power over SNR or cap.
    Sweep {
        /// `snr` or `xi`.
        #[arg(long)]
        axis: Option<SweepAxis>,
        /// Axis values, comma separated and increasing.
        #[arg(long)]
        values: Option<List<f64>>,
        #[arg(long)]
        unit: Option<AxisUnit>,
        #[arg(long)]
        trials: Option<usize>,
        /// Any of zfb, nfb, lower_bound, feasible.
        #[arg(long)]
        solvers: Option<List<SolverKind>>,
        /// `identical` or `distinct:w1,w2,...` (rate shares summing to 1).
        #[arg(long)]
        pattern: Option<SnrPattern>,
        /// Random feasible beamformers averaged per trial by `feasible`.
        #[arg(long)]
        feasible_samples: Option<usize>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Solve one instance read from a channel file.
    Solve {
        /// Channel file with H, Hx and Gx blocks.
        #[arg(long)]
        channels: Option<PathBuf>,
        /// `zfb` or `nfb`.
        #[arg(long)]
        mode: Option<String>,
        /// JSON record destination (stdout if absent).
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Run the built-in property checks on random instances.
    Selftest {
        #[arg(long)]
        instances: Option<usize>,
    },
}

struct Context {
    file: ConfigFile,
    scenario: ScenarioArgs,
}

impl Context {
    fn seed(&self) -> Result<u64, CliError> {
        let env_seed = match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer")))?,
            Err(_) => 0,
        };
        self.file.pick(self.scenario.seed, "seed", env_seed)
    }

    /// Scenario with explicit dimensions; the rest comes from flags/file.
    fn scenario_with(&self, m: usize, n: usize, p: usize, q: usize) -> Result<ScenarioConfig, CliError> {
        let f = &self.file;
        let s = &self.scenario;
        let snr = f.pick_opt(s.snr.clone(), "snr")?;
        let default_d = snr.as_ref().map_or(2, |l| l.0.len());
        let d = f.pick(s.d, "d", default_d)?;
        let targets = match snr {
            None => vec![10.0; d],
            Some(List(v)) if v.len() == 1 => vec![v[0]; d],
            Some(List(v)) if v.len() == d => v,
            Some(List(v)) => {
                return Err(CliError::Usage(format!("{} SNR targets given for {d} streams", v.len())));
            }
        };
        let pp = f.pick(s.primary_power, "primary_power", 1.0)?;
        let xi = f.pick(s.xi, "xi", 0.1)?;
        Ok(ScenarioConfig::new(m, n, p, q, d, pp, xi, targets, self.seed()?)?)
    }

    fn scenario(&self) -> Result<ScenarioConfig, CliError> {
        let f = &self.file;
        let s = &self.scenario;
        self.scenario_with(
            f.pick(s.m, "m", 5)?,
            f.pick(s.n, "n", 5)?,
            f.pick(s.p, "p", 2)?,
            f.pick(s.q, "q", 2)?,
        )
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => {
            std::fs::write(path, text)?;
            log::info!("wrote {}", path.display());
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn summarize(solution: &BeamformingSolution) {
    let snr: Vec<String> = solution.per_stream_snr.iter().map(|v| format!("{v:.6e}")).collect();
    eprintln!("mode          {}", solution.mode.as_str());
    eprintln!("power         {:.12e}", solution.power);
    eprintln!("interference  {:.12e}", solution.interference);
    match solution.y {
        Some(y) => eprintln!("y             {y:.12e}"),
        None => eprintln!("y             -"),
    }
    eprintln!("stream SNR    [{}]", snr.join(", "));
    if solution.tolerance_warning {
        eprintln!("warning: interference tolerance not reached exactly");
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let ctx = Context {
        file,
        scenario: cli.scenario,
    };
    let f = &ctx.file;
    match cli.command {
        Command::AccessProb {
            values,
            unit,
            streams,
            trials,
            output,
        } => {
            let spec = AccessSpec {
                scenario: ctx.scenario()?,
                xi_values: f.require(values, "xi_values")?.0,
                axis_unit: f.pick(unit, "unit", AxisUnit::Linear)?,
                streams: f.pick(streams, "streams", List(vec![1, 2, 3]))?.0,
                trials: f.pick(trials, "trials", 2000)?,
            };
            let output = f.pick_opt(output, "output")?;
            emit(&run_access_prob(&spec)?.to_csv(), output.as_deref())
        }
        Command::Sweep {
            axis,
            values,
            unit,
            trials,
            solvers,
            pattern,
            feasible_samples,
            output,
        } => {
            let mut spec = SweepSpec::new(
                ctx.scenario()?,
                f.pick(axis, "axis", SweepAxis::Snr)?,
                f.require(values, "values")?.0,
                f.pick(trials, "trials", 2000)?,
            );
            spec.axis_unit = f.pick(unit, "unit", AxisUnit::Linear)?;
            if let Some(List(s)) = f.pick_opt(solvers, "solvers")? {
                spec.solvers = s;
            }
            spec.snr_pattern = f.pick(pattern, "pattern", SnrPattern::Identical)?;
            spec.feasible_samples = f.pick(feasible_samples, "feasible_samples", spec.feasible_samples)?;
            let output = f.pick_opt(output, "output")?;
            log::info!(
                "sweeping {} over {} values, {} trials each",
                spec.axis.as_str(),
                spec.axis_values.len(),
                spec.trials
            );
            let table = run_sweep(&spec)?;
            if table.ordering_violations > 0 {
                log::warn!("{} trials violated zfb >= nfb >= lower_bound", table.ordering_violations);
            }
            emit(&table.to_csv(), output.as_deref())
        }
        Command::Solve { channels, mode, dump } => {
            let path: PathBuf = f.require(channels, "channels")?;
            let ch = read_channel_file(&path)?;
            let config = ctx.scenario_with(ch.m(), ch.n(), ch.p(), ch.q())?;
            let derived = build_derived(&ch, &config)?;
            let snr = config.snr();
            let mode: String = f.pick(mode, "mode", "nfb".to_string())?;
            let solution = match mode.to_ascii_lowercase().as_str() {
                "zfb" => solve_zfb(&derived, &snr)?,
                "nfb" => solve_nfb(&derived, &snr, config.xi())?,
                other => return Err(CliError::Usage(format!("unknown mode `{other}` (expected zfb or nfb)"))),
            };
            summarize(&solution);
            let mut json = SolutionRecord::new(&solution, Some(&config)).to_json()?;
            json.push('\n');
            let dump = f.pick_opt(dump, "dump")?;
            emit(&json, dump.as_deref())
        }
        Command::Selftest { instances } => {
            let instances = f.pick(instances, "instances", 50)?;
            let report = run_selftest(instances, ctx.seed()?);
            for check in &report.checks {
                let status = if check.passed { "PASS" } else { "FAIL" };
                println!("{status} {} ({} instances): {}", check.name, check.instances, check.detail);
            }
            match report.checks.iter().filter(|c| !c.passed).count() {
                0 => Ok(()),
                failed => Err(CliError::SelftestFailed { failed }),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
