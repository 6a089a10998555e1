use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bvoigt::driver;
use bvoigt::experiments::{Family, SweepSpec};
use bvoigt::io::RunConfig;
use bvoigt::{verify, Error};

#[derive(Parser)]
#[command(name = "bvoigt", version, about = "Boussinesq-Voigt pseudo-spectral solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration.
    Run {
        config: PathBuf,
        /// Output directory (defaults to output.directory in the config).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sweep one coefficient toward zero.
    Sweep {
        config: PathBuf,
        #[arg(long, value_parser = ["alpha", "kappa", "nu_y"])]
        family: String,
        /// Strictly decreasing positive values (default: six halvings).
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        values: Vec<f64>,
        /// Output directory (defaults to <output.directory>/sweep_<family>).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the operator-oracle, skew-symmetry and inequality suites.
    Verify,
    /// Continue a run from a snapshot.
    Resume {
        snapshot: PathBuf,
        #[arg(long)]
        t_end: f64,
        /// Configuration (defaults to run.cfg next to the snapshot).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (defaults to the snapshot's directory).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn default_values(family: Family) -> Vec<f64> {
    let start = match family {
        Family::Alpha => 0.2,
        Family::Kappa | Family::NuY => 1e-2,
    };
    SweepSpec::halving(start, 6)
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, output } => {
            let cfg = RunConfig::load(&config)?;
            let traj = driver::run(&cfg, output.as_deref())?;
            if let Some(last) = traj.last() {
                eprintln!(
                    "done: t = {}, {} records, |theta| = {:e}, E = {:e}",
                    last.t,
                    traj.entries.len(),
                    last.l2_theta,
                    last.voigt_energy
                );
            }
        }
        Command::Sweep {
            config,
            family,
            values,
            output,
        } => {
            let cfg = RunConfig::load(&config)?;
            let family = Family::parse(&family)?;
            let values = if values.is_empty() { default_values(family) } else { values };
            let spec = driver::sweep_spec(&cfg, family, values)?;
            let dir = output.unwrap_or_else(|| cfg.output.directory.join(format!("sweep_{family}")));
            let res = driver::sweep(&spec, &dir)?;
            for r in &res.runs {
                eprintln!(
                    "{family} = {:<10} e_L2_u = {:.3e}  e_V_u = {:.3e}{}",
                    r.value,
                    r.errors[0],
                    r.errors[1],
                    if r.censored { "  (censored)" } else { "" }
                );
            }
            for fit in res.orders.iter().flatten() {
                eprintln!("order {}: {:.3}", fit.norm.column(), fit.order);
            }
            eprintln!("written to {}", dir.display());
        }
        Command::Verify => {
            let rows = verify::run_all()?;
            let mut failed = 0;
            println!("{:<5} {:<12} {:<36} {:>11}    {}", "", "suite", "check", "value", "limit");
            for r in &rows {
                println!("{r}");
                if !r.passed {
                    failed += 1;
                }
            }
            if failed > 0 {
                return Err(Error::Invariant(format!("{failed} verification check(s) failed")));
            }
        }
        Command::Resume {
            snapshot,
            t_end,
            config,
            output,
        } => {
            let path = config.unwrap_or_else(|| driver::default_resume_config(&snapshot));
            let cfg = RunConfig::load(&path)?;
            let traj = driver::resume(&snapshot, t_end, &cfg, output.as_deref())?;
            eprintln!("resumed: {} records", traj.entries.len());
        }
    }
    Ok(())
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) | Error::Parse(_) => "config",
        Error::Invariant(_) => "invariant",
        Error::UnsupportedDimension(_) | Error::UnsupportedConfig(_) => "unsupported",
        Error::NumericalFault { .. } => "numerical-fault",
        Error::Snapshot(_) => "snapshot",
        Error::Io(_) => "io",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = std::env::var("BV_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: BV_THREADS ignored: {e}");
        }
    }
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", error_kind(&e));
            ExitCode::FAILURE
        }
    }
}
