use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hybridbeam::harness::{run_experiment, ChannelSpec, ConfigFile, ExperimentKind, ExperimentSpec, RunConfig};
use hybridbeam::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "hybridbeam", version, about = "Hybrid mmWave receiver architecture experiments")]
struct Cli {
    /// TOML or JSON file with [system], [power_model] and [experiment] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ChannelChoice {
    /// Quantized angles, one ray per cluster.
    OnGrid,
    /// Continuous angles with angular spread.
    Clustered,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Power consumption per architecture plus the fully digital reference.
    Power {
        #[arg(long)]
        nr: Option<usize>,
        /// RF chain counts: `4`, `1,2,4` or `1..16`.
        #[arg(long)]
        lr: Option<String>,
    },
    /// Mutual coherence of random training against the Welch bound.
    Coherence {
        /// Measurement counts: `64..1024` doubles, `a..b:step`, or a list.
        #[arg(long)]
        m: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Channel estimation NMSE versus SNR or training steps.
    Estimate {
        /// SNR values in dB.
        #[arg(long, conflicts_with = "steps", allow_hyphen_values = true)]
        snr: Option<String>,
        /// Training step counts.
        #[arg(long)]
        steps: Option<String>,
        #[arg(long, value_enum)]
        channel: Option<ChannelChoice>,
        #[command(flatten)]
        common: Common,
    },
    /// Spectral efficiency of the combiner designs versus RF chains.
    Combine {
        #[arg(long)]
        lr: Option<String>,
        /// Report bit rate against power instead.
        #[arg(long)]
        rate: bool,
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the experiment described by --config.
    Sweep,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    trials: Option<usize>,
}

fn parse_number(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Config(format!("'{s}' is not a number")))
}

/// `a,b,c`, `a..b:step`, or `a..b` (unit steps, or doubling when `doubling`).
fn parse_sweep(text: &str, doubling: bool) -> Result<Vec<f64>> {
    let values = if let Some((lo, rest)) = text.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (hi, Some(parse_number(step)?)),
            None => (rest, None),
        };
        let (lo, hi) = (parse_number(lo)?, parse_number(hi)?);
        if lo > hi {
            return Err(Error::Config(format!("empty range '{text}'")));
        }
        let mut out = Vec::new();
        let mut v = lo;
        match step {
            Some(step) if step > 0.0 => {
                let n = ((hi - lo) / step + 1e-9).floor() as usize;
                out.extend((0..=n).map(|i| lo + i as f64 * step));
            }
            Some(_) => return Err(Error::Config(format!("step must be positive in '{text}'"))),
            None if doubling => {
                if lo <= 0.0 {
                    return Err(Error::Config(format!("doubling range needs a positive start in '{text}'")));
                }
                while v <= hi {
                    out.push(v);
                    v *= 2.0;
                }
            }
            None => {
                while v <= hi + 1e-9 {
                    out.push(v);
                    v += 1.0;
                }
            }
        }
        out
    } else {
        text.split(',').map(parse_number).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        return Err(Error::Config(format!("'{text}' gives no values")));
    }
    Ok(values)
}

fn build_run(cli: &Cli) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let mut run = match &cli.command {
        Command::Sweep => {
            if cli.config.is_none() {
                return Err(Error::Config("sweep needs --config".into()));
            }
            file.into_run()?
        }
        command => {
            let mut run = RunConfig { system: file.system, power_model: file.power_model, experiment: ExperimentSpec::new(ExperimentKind::PowerTable) };
            run.experiment = subcommand_spec(command, &mut run)?;
            run
        }
    };
    if let Some(seed) = cli.seed {
        run.system.base_seed = seed;
    }
    Ok(run)
}

fn subcommand_spec(command: &Command, run: &mut RunConfig) -> Result<ExperimentSpec> {
    let system = &mut run.system;
    let set_trials = |system: &mut hybridbeam::config::SystemConfig, common: &Common| {
        if let Some(t) = common.trials {
            system.trials = t;
        }
    };
    let spec = match command {
        Command::Power { nr, lr } => {
            if let Some(nr) = nr {
                system.n_r = *nr;
            }
            let sweep = match lr {
                Some(lr) => parse_sweep(lr, false)?,
                None => (1..=system.n_r).map(|v| v as f64).collect(),
            };
            // The table ignores the scenario's own L_r; keep it consistent with N_r.
            system.l_r = system.l_r.min(system.n_r);
            system.n_s = system.n_s.min(system.l_r);
            ExperimentSpec::new(ExperimentKind::PowerTable).with_sweep(sweep)
        }
        Command::Coherence { m, common } => {
            set_trials(system, common);
            let mut spec = ExperimentSpec::new(ExperimentKind::CoherenceVsM);
            if let Some(m) = m {
                spec.sweep = Some(parse_sweep(m, true)?);
            }
            spec
        }
        Command::Estimate { snr, steps, channel, common } => {
            set_trials(system, common);
            let mut spec = match (snr, steps) {
                (_, Some(steps)) => {
                    ExperimentSpec::new(ExperimentKind::NmseVsTrainingSteps).with_sweep(parse_sweep(steps, false)?)
                }
                (Some(snr), None) => ExperimentSpec::new(ExperimentKind::NmseVsSnr).with_sweep(parse_sweep(snr, false)?),
                (None, None) => ExperimentSpec::new(ExperimentKind::NmseVsSnr),
            };
            spec.channel = channel.map(|c| match c {
                ChannelChoice::OnGrid => ChannelSpec::ON_GRID,
                ChannelChoice::Clustered => ChannelSpec::CLUSTERED,
            });
            spec
        }
        Command::Combine { lr, rate, snr, common } => {
            set_trials(system, common);
            if let Some(snr) = snr {
                system.snr_db = *snr;
            }
            let kind = if *rate { ExperimentKind::RateVsPower } else { ExperimentKind::SeVsRfChains };
            let mut spec = ExperimentSpec::new(kind);
            if let Some(lr) = lr {
                spec.sweep = Some(parse_sweep(lr, false)?);
            }
            spec
        }
        Command::Sweep => unreachable!("handled by build_run"),
    };
    Ok(spec)
}

fn execute(cli: &Cli) -> Result<()> {
    let run = build_run(cli)?;
    let table = run_experiment(&run)?;
    let text = match cli.format {
        Format::Csv => table.to_csv()?,
        Format::Json => table.to_json(&run)? + "\n",
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
