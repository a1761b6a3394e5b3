use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twopatch::certificates::CertificateId;
use twopatch_cli::config::{parse_raw, CouplingName, Overrides, RawConfig, ReactionName};
use twopatch_cli::{
    cmd_check, cmd_equilibria, cmd_mixing, cmd_simulate, cmd_sweep, parse_range, CliError, PlaneName, SweepArgs,
};

#[derive(Parser)]
#[command(
    name = "twopatch",
    version,
    about = "Equilibria, certificates, sweeps and simulations of the two-patch model"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(flatten)]
    model: ModelFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelFlags {
    #[arg(long = "D", global = true)]
    d: Option<f64>,
    #[arg(long, global = true)]
    lambda1: Option<f64>,
    #[arg(long, global = true)]
    lambda2: Option<f64>,
    #[arg(long, global = true)]
    k1: Option<f64>,
    #[arg(long, global = true)]
    k2: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true, value_enum)]
    reaction: Option<ReactionName>,
    /// Cubic threshold.
    #[arg(long, global = true)]
    a: Option<f64>,
    #[arg(long, global = true, value_enum)]
    coupling: Option<CouplingName>,
}

#[derive(Subcommand)]
enum Command {
    /// List equilibria with eigenvalues, stability and region.
    Equilibria {
        /// Also estimate basin fractions from this many seeded samples.
        #[arg(long)]
        basins: Option<usize>,
    },
    /// Evaluate a certificate; exit 0 if it holds, 2 if not.
    Check {
        #[arg(value_parser = parse_certificate)]
        certificate: CertificateId,
    },
    /// Classify a parameter plane by equilibrium count.
    Sweep {
        #[arg(long, value_enum)]
        plane: Option<PlaneName>,
        /// Both axes, as min:max:steps.
        #[arg(long, value_parser = parse_range)]
        range: Option<twopatch::cartography::Axis>,
        /// Vertical axis, if different.
        #[arg(long, value_parser = parse_range)]
        y_range: Option<twopatch::cartography::Axis>,
        /// Certificate boundaries to overlay (repeatable).
        #[arg(long = "overlay", value_parser = parse_certificate)]
        overlays: Vec<CertificateId>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Integrate one trajectory and print it as CSV.
    Simulate {
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long)]
        y0: Option<f64>,
        /// Integration horizon.
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Large-dispersal totals for the logistic model.
    Mixing {
        /// Comma-separated increasing dispersal rates.
        #[arg(long = "D-list", value_delimiter = ',', required = true)]
        d_list: Vec<f64>,
    },
    /// Exact equilibria with the sawtooth reaction.
    Sawtooth,
}

fn parse_certificate(s: &str) -> Result<CertificateId, String> {
    s.parse().map_err(|e: twopatch::Error| e.to_string())
}

fn load(cli: &Cli) -> Result<RawConfig, CliError> {
    match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            parse_raw(&text)
        }
        None => Ok(RawConfig::default()),
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let mut raw = load(&cli)?;
    let m = &cli.model;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut diag = io::stderr();

    if let Command::Sweep { plane, range, y_range, overlays, csv, svg } = &cli.command {
        raw.apply(&Overrides { seed: cli.seed, coupling: m.coupling, ..Default::default() });
        let args = SweepArgs {
            plane: *plane,
            range: *range,
            y_range: *y_range,
            d: m.d,
            k1: m.k1,
            k2: m.k2,
            gamma: m.gamma,
            reaction: m.reaction,
            a: m.a,
            overlays: overlays.clone(),
            csv: csv.clone(),
            svg: svg.clone(),
            threads: cli.threads,
        };
        cmd_sweep(&raw, &args, &mut out, &mut diag)?;
        out.flush()?;
        return Ok(0);
    }

    let t_max = match &cli.command {
        Command::Simulate { t_end, .. } => *t_end,
        _ => None,
    };
    let reaction = match cli.command {
        Command::Sawtooth => Some(ReactionName::Sawtooth),
        _ => m.reaction,
    };
    raw.apply(&Overrides {
        d: m.d,
        lambda1: m.lambda1,
        lambda2: m.lambda2,
        k1: m.k1,
        k2: m.k2,
        alpha: m.alpha,
        beta: m.beta,
        gamma: m.gamma,
        reaction,
        a: m.a,
        coupling: m.coupling,
        seed: cli.seed,
        t_max,
    });
    let cfg = raw.resolve()?;
    let code = match cli.command {
        Command::Equilibria { basins } => cmd_equilibria(&cfg, basins, &mut out, &mut diag).map(|_| 0)?,
        Command::Sawtooth => cmd_equilibria(&cfg, None, &mut out, &mut diag).map(|_| 0)?,
        Command::Check { certificate } => {
            if cmd_check(&cfg, certificate, &mut out)? {
                0
            } else {
                2
            }
        }
        Command::Simulate { x0, y0, .. } => cmd_simulate(&cfg, (x0, y0), &mut out, &mut diag).map(|_| 0)?,
        Command::Mixing { d_list } => cmd_mixing(&cfg, &d_list, &mut out, &mut diag).map(|_| 0)?,
        Command::Sweep { .. } => unreachable!("handled above"),
    };
    out.flush()?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // exit code 2 is reserved for failed certificates
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(1)
        }
    }
}
