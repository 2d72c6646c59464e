//! Configuration, orchestration and file output for the `apsis` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

pub use commands::Context;
pub use config::ExperimentConfig;
pub use error::RunError;
pub use output::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Orbit,
    Nondeg,
    Continue,
    LimitClassical,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Orbit => "orbit",
            Command::Nondeg => "nondeg",
            Command::Continue => "continue",
            Command::LimitClassical => "limit-classical",
        }
    }

    pub fn run(self, ctx: &Context) -> Result<Report, RunError> {
        match self {
            Command::Orbit => commands::cmd_orbit(ctx),
            Command::Nondeg => commands::cmd_nondeg(ctx),
            Command::Continue => commands::cmd_continue(ctx),
            Command::LimitClassical => commands::cmd_limit_classical(ctx),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub reproducible: bool,
    pub tol_scale: f64,
}

/// Loads the config, runs the command and writes its files and manifest.
/// A failure detected after the outputs exist stays in `Report::status`.
pub fn execute(inv: &Invocation) -> Result<Report, RunError> {
    let config = ExperimentConfig::load(&inv.config)?;
    let base_dir = inv.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let out = inv
        .out
        .clone()
        .or_else(|| config.output.dir.clone().map(|d| if d.is_absolute() { d } else { base_dir.join(d) }))
        .ok_or_else(|| RunError::Validation("no output directory: pass --out or set output.dir".into()))?;
    let ctx = Context::new(config, inv.tol_scale, base_dir)?;
    let report = inv.command.run(&ctx)?;
    output::write_report(&out, inv.command.name(), &ctx.config_hash, ctx.tolerances, inv.reproducible, &report)?;
    Ok(report)
}
