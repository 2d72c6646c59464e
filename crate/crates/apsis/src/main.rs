use std::path::PathBuf;
use std::process::ExitCode;

use apsis::error::exit;
use apsis::{execute, Command, Invocation};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "apsis", version, about = "Closed orbits of central force problems: non-degeneracy and continuation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Find a closed k:n orbit and emit its summary and trajectory.
    Orbit(Common),
    /// Fixed-period and fixed-energy verdicts by both routes.
    Nondeg(Common),
    /// Continue the orbit manifold into perturbed periodic solutions.
    Continue(Common),
    /// Convergence of relativistic observables to their classical values.
    LimitClassical(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit timings so identical configs give byte-identical output.
    #[arg(long)]
    reproducible: bool,
    /// Multiplies integrator, root-finding and residual tolerances.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::VALIDATION } else { exit::SUCCESS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, common) = match cli.command {
        Cmd::Orbit(c) => (Command::Orbit, c),
        Cmd::Nondeg(c) => (Command::Nondeg, c),
        Cmd::Continue(c) => (Command::Continue, c),
        Cmd::LimitClassical(c) => (Command::LimitClassical, c),
    };
    let inv = Invocation {
        command,
        config: common.config,
        out: common.out,
        reproducible: common.reproducible,
        tol_scale: common.tol_scale,
    };
    match execute(&inv) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            match report.status {
                Some(err) => {
                    eprintln!("error[{}]: {err}", err.code());
                    ExitCode::from(err.exit_code())
                }
                None => ExitCode::from(exit::SUCCESS),
            }
        }
        Err(err) => {
            eprintln!("error[{}]: {err}", err.code());
            ExitCode::from(err.exit_code())
        }
    }
}
