//! Command-line front-end: `solve`, `converge`, `robust` and `check-op`.
//!
//! Exit status: 0 when every flag passes, 1 on a failed flag or a runtime
//! error, 2 on a usage or configuration error.

pub mod config;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{Command, RunConfig, SchemeChoice};

#[derive(Parser, Debug)]
#[command(name = "sdoc", version, about = "Stokes-Darcy optimal control: solves, convergence studies and operator checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArg,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Subcommand, Debug, Clone, Copy)]
pub enum CommandArg {
    /// Solve the manufactured problem on the coarsest mesh.
    Solve,
    /// Convergence study over refinement levels.
    Converge,
    /// Pressure-robustness experiment over a list of scales.
    Robust,
    /// Reconstruction operator identities and the manufactured residual gate.
    CheckOp,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Solve => Command::Solve,
            CommandArg::Converge => Command::Converge,
            CommandArg::Robust => Command::Robust,
            CommandArg::CheckOp => Command::CheckOp,
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct Options {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Refinement levels of `converge` (at least 3).
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub scheme: Option<SchemeChoice>,
    /// Comma-separated pressure scales, e.g. `1,100,10000`.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub scales: Option<Vec<f64>>,
    /// Output directory for `report.json` and the CSV/VTK files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write legacy VTK files of the solutions (`solve` only).
    #[arg(long, global = true)]
    pub vtk: bool,
}

/// Config file (or defaults) with the command-line overrides applied.
pub fn resolve(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.options.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let o = &cli.options;
    cfg.command = Some(cli.command.into());
    if let Some(l) = o.levels {
        cfg.levels = l;
    }
    if let Some(s) = o.scheme {
        cfg.scheme = s;
    }
    if let Some(s) = &o.scales {
        cfg.scales = s.clone();
    }
    if let Some(d) = &o.out {
        cfg.out = d.clone();
    }
    cfg.vtk |= o.vtk;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args`, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match run::execute(cli.command.into(), &cfg) {
        Ok(r) if r.passed() => 0,
        Ok(_) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
