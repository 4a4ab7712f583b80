use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use elweno_cli::commands;
use elweno_cli::{CliError, RawConfig, RunConfig};

#[derive(Parser)]
#[command(name = "elweno", version, about = "Eulerian-Lagrangian WENO benchmark harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// key = value file; command-line keys take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(flatten)]
    keys: Overrides,
}

#[derive(Subcommand)]
enum Cmd {
    /// One simulation with diagnostics and snapshots
    Run,
    /// Error table over the configured levels
    Converge,
    /// L2 error and stability over the configured CFL numbers
    Cflsweep,
    /// Quick invariant checks
    Selftest,
}

/// Config keys accepted on the command line.
#[derive(Args)]
struct Overrides {
    /// sdf, sdf-disc, lbfp, lbfp-relax, kh, ins, vortex-patch
    #[arg(long, global = true)]
    problem: Option<String>,
    #[arg(long, global = true)]
    nx: Option<String>,
    #[arg(long, global = true)]
    ny: Option<String>,
    #[arg(long, global = true)]
    cfl: Option<String>,
    #[arg(long = "t_end", alias = "t-end", global = true)]
    t_end: Option<String>,
    /// imex111, imex122, imex233 or rk3
    #[arg(long, global = true)]
    scheme: Option<String>,
    #[arg(long = "weno_gamma0", alias = "weno-gamma0", global = true)]
    weno_gamma0: Option<String>,
    #[arg(long = "weno_eps", alias = "weno-eps", global = true)]
    weno_eps: Option<String>,
    #[arg(long = "cg_tol", alias = "cg-tol", global = true)]
    cg_tol: Option<String>,
    #[arg(long = "cg_max_iter", alias = "cg-max-iter", global = true)]
    cg_max_iter: Option<String>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<String>,
    /// Comma-separated snapshot times
    #[arg(long, global = true)]
    snapshots: Option<String>,
    /// Comma-separated meshes, `N` or `NxM`
    #[arg(long, global = true)]
    levels: Option<String>,
    /// Reference mesh for problems without an exact solution
    #[arg(long, global = true)]
    reference: Option<String>,
    #[arg(long, global = true)]
    cfls: Option<String>,
    /// mean or integrated
    #[arg(long, global = true)]
    norms: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> [(&'static str, &Option<String>); 16] {
        [
            ("problem", &self.problem),
            ("nx", &self.nx),
            ("ny", &self.ny),
            ("cfl", &self.cfl),
            ("t_end", &self.t_end),
            ("scheme", &self.scheme),
            ("weno_gamma0", &self.weno_gamma0),
            ("weno_eps", &self.weno_eps),
            ("cg_tol", &self.cg_tol),
            ("cg_max_iter", &self.cg_max_iter),
            ("out", &self.out),
            ("snapshots", &self.snapshots),
            ("levels", &self.levels),
            ("reference", &self.reference),
            ("cfls", &self.cfls),
            ("norms", &self.norms),
        ]
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    if let Cmd::Selftest = cli.cmd {
        return commands::cmd_selftest();
    }
    let mut raw = match &cli.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    for (key, value) in cli.keys.pairs() {
        if let Some(v) = value {
            raw.set(key, v)?;
        }
    }
    let cfg = RunConfig::try_from(&raw)?;
    match cli.cmd {
        Cmd::Run => commands::cmd_run(&cfg),
        Cmd::Converge => commands::cmd_converge(&cfg).map(drop),
        Cmd::Cflsweep => commands::cmd_cflsweep(&cfg).map(drop),
        Cmd::Selftest => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
