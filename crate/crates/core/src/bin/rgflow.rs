use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rgflow::runner::{
    cmd_harmonic_mean, cmd_plots, cmd_run, cmd_sweep_barenblatt, cmd_sweep_relevant, cmd_table,
    commands::EXIT_CONFIG, parse_config, parse_rows, RelevantSweep, RunConfig, RunOverrides,
    DEFAULT_EPSILONS,
};

/// Renormalization-group solver for long-time asymptotics of 1-D diffusion.
/// No randomness is used anywhere: equal inputs give identical outputs.
#[derive(Parser, Debug)]
#[command(name = "rgflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Discretization {
    /// Grid node count (odd).
    #[arg(long)]
    count: Option<usize>,
    /// Grid half width.
    #[arg(long)]
    half_width: Option<f64>,
    /// Maximum number of RG iterations.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Stop once reldiff_Linf falls below this; 0 disables.
    #[arg(long)]
    reldiff_tol: Option<f64>,
}

impl Discretization {
    fn overrides(&self) -> RunOverrides {
        RunOverrides {
            count: self.count,
            half_width: self.half_width,
            max_iter: self.max_iter,
            reldiff_tol: self.reldiff_tol,
        }
    }

    /// `config` (or the defaults) with the overrides applied.
    fn base(&self, config: Option<&PathBuf>) -> Result<RunConfig, i32> {
        let mut c = load(config)?;
        self.overrides().apply(&mut c).map_err(|e| {
            eprintln!("error: {e}");
            e.exit_code()
        })?;
        Ok(c)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one simulation described by a config file.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run reference table rows, e.g. `--rows 11-13`.
    Table {
        #[arg(long, default_value = "1-15")]
        rows: String,
        #[arg(long, default_value = "table")]
        out: PathBuf,
        #[command(flatten)]
        disc: Discretization,
    },
    /// Barenblatt exponent against epsilon.
    SweepBarenblatt {
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        /// Base configuration; its equation form is replaced.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "barenblatt")]
        out: PathBuf,
        #[command(flatten)]
        disc: Discretization,
    },
    /// Exponent for absorption `-u^a` against `a`.
    SweepRelevant {
        #[arg(long, value_delimiter = ',', default_value = "1.5,2,2.5")]
        a: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value = "g1")]
        g: String,
        /// Center value of the initial data (default: matched to `u' = -u^a`).
        #[arg(long)]
        amplitude: Option<f64>,
        /// Base configuration; its equation is replaced.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "relevant")]
        out: PathBuf,
        #[command(flatten)]
        disc: Discretization,
    },
    /// Print the harmonic mean of `1 + mu g`.
    HarmonicMean {
        #[arg(long, default_value = "g1")]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
    },
    /// Write gnuplot scripts for the artifacts in a directory.
    Plots {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: Option<&PathBuf>) -> Result<RunConfig, i32> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| {
            eprintln!("error: cannot read {}: {e}", p.display());
            EXIT_CONFIG
        })?,
        None => String::new(),
    };
    parse_config(&text).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })
}

fn dispatch(cli: Cli) -> Result<i32, i32> {
    Ok(match cli.command {
        Command::Run { config, out } => {
            let mut c = load(config.as_ref())?;
            if let Some(out) = out {
                c.output.dir = out;
            }
            cmd_run(&c)
        }
        Command::Table { rows, out, disc } => {
            let rows = parse_rows(&rows).map_err(|e| {
                eprintln!("error: {e}");
                e.exit_code()
            })?;
            cmd_table(&rows, &disc.overrides(), &out)
        }
        Command::SweepBarenblatt {
            eps,
            config,
            out,
            disc,
        } => {
            let eps = eps.unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
            cmd_sweep_barenblatt(&eps, &disc.base(config.as_ref())?, &out)
        }
        Command::SweepRelevant {
            a,
            mu,
            g,
            amplitude,
            config,
            out,
            disc,
        } => {
            let sweep = RelevantSweep { mu, g, amplitude };
            cmd_sweep_relevant(&a, &sweep, &disc.base(config.as_ref())?, &out)
        }
        Command::HarmonicMean { g, mu } => cmd_harmonic_mean(&g, mu),
        Command::Plots { out } => cmd_plots(&out),
    })
}

fn main() -> ExitCode {
    let code = dispatch(Cli::parse()).unwrap_or_else(|c| c);
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}
