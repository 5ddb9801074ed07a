use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mediamod::harness::{
    cmd_ber, cmd_cir, cmd_pmf, cmd_switching_curve, cmd_validate, parse_grid, BerMode,
    ExperimentKind, ExperimentSpec,
};
use mediamod::{Bit, SystemConfig};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "mediamod", version, about = "Media-modulation molecular communication experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// key=value configuration file
    #[arg(long, global = true, env = "MEDIAMOD_CONFIG")]
    config: Option<PathBuf>,

    /// Override one configuration key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Master seed for all random streams
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check modelling assumptions and print derived quantities
    Validate,
    /// Switching probability over irradiance for several TX occupancies
    SwitchingCurve {
        /// Irradiance grid in W/m2: `a,b,c`, `log:start:stop:n` or `lin:start:stop:n`
        #[arg(long, default_value = "log:1e3:1e6:25")]
        powers: String,
        /// Molecules in the TX volume
        #[arg(long, default_value = "1e2,1e10,1e14")]
        n_tx: String,
    },
    /// Expected channel impulse response, optionally with PBS
    Cir {
        #[arg(long, default_value = "lin:0:40:81")]
        times: String,
        /// Add particle-simulation columns
        #[arg(long)]
        pbs: bool,
        /// PBS realizations (default: n_realizations from the config)
        #[arg(long)]
        realizations: Option<u64>,
    },
    /// Analytic and PBS distribution of the received count at t_s
    Pmf {
        #[arg(long, default_value_t = 1)]
        bit: u8,
        #[arg(long)]
        realizations: Option<u64>,
    },
    /// Bit error rate over irradiance for several N_sys
    Ber {
        #[arg(long, default_value = "log:1e3:1e6:25")]
        powers: String,
        #[arg(long, default_value = "10,50,100")]
        n_sys: String,
        /// Derive h(t_s) and p_TX from the geometry instead of fixing them
        #[arg(long)]
        derived: bool,
        /// Fixed h(t_s) in exogenous mode
        #[arg(long, default_value_t = 0.999)]
        h: f64,
        /// Fixed p_TX in exogenous mode
        #[arg(long, default_value_t = 0.1)]
        p_tx: f64,
        /// Monte-Carlo trials per row; adds empirical columns
        #[arg(long)]
        empirical_trials: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threshold: u64,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn load(common: &Common) -> Result<SystemConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            SystemConfig::from_document(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => SystemConfig::default(),
    };
    for assignment in &common.set {
        cfg = cfg
            .with_override(assignment)
            .map_err(|e| Failure::Usage(format!("--set {assignment}: {e}")))?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

fn counts(text: &str) -> Result<Vec<u64>, Failure> {
    parse_grid(text)
        .map_err(usage)?
        .into_iter()
        .map(|x| {
            if x >= 1.0 && x.fract() == 0.0 {
                Ok(x as u64)
            } else {
                Err(Failure::Usage(format!("`{x}` is not a positive integer")))
            }
        })
        .collect()
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let cfg = load(&cli.common)?;
    let (output, passed) = match cli.command {
        Command::Validate => {
            let report = cmd_validate(&cfg).map_err(runtime)?;
            (report.text.clone(), report.passed())
        }
        Command::SwitchingCurve { powers, n_tx } => {
            let spec = ExperimentSpec {
                powers: parse_grid(&powers).map_err(usage)?,
                n_tx: parse_grid(&n_tx).map_err(usage)?,
                ..ExperimentSpec::new(ExperimentKind::SwitchingCurve)
            };
            (cmd_switching_curve(&cfg, &spec).map_err(usage)?, true)
        }
        Command::Cir {
            times,
            pbs,
            realizations,
        } => {
            let spec = ExperimentSpec {
                times: parse_grid(&times).map_err(usage)?,
                pbs_realizations: pbs.then(|| realizations.unwrap_or(cfg.n_realizations)),
                ..ExperimentSpec::new(ExperimentKind::Cir)
            };
            (cmd_cir(&cfg, &spec).map_err(usage)?, true)
        }
        Command::Pmf { bit, realizations } => {
            let spec = ExperimentSpec {
                bit: Bit::try_from(bit).map_err(usage)?,
                pbs_realizations: realizations,
                ..ExperimentSpec::new(ExperimentKind::Pmf)
            };
            (cmd_pmf(&cfg, &spec).map_err(usage)?.csv, true)
        }
        Command::Ber {
            powers,
            n_sys,
            derived,
            h,
            p_tx,
            empirical_trials,
            threshold,
        } => {
            let spec = ExperimentSpec {
                powers: parse_grid(&powers).map_err(usage)?,
                n_sys: counts(&n_sys)?,
                ber_mode: if derived {
                    BerMode::Derived
                } else {
                    BerMode::Exogenous {
                        hit_probability: h,
                        p_tx,
                    }
                },
                empirical_trials,
                threshold,
                ..ExperimentSpec::new(ExperimentKind::Ber)
            };
            (cmd_ber(&cfg, &spec).map_err(usage)?, true)
        }
    };
    match &cli.common.out {
        Some(path) => std::fs::write(path, output)
            .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?,
        None => print!("{output}"),
    }
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(Failure::Usage(msg)) => {
            eprintln!("mediamod: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("mediamod: {msg}");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
    }
}
