use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nodal_cli::commands::EXIT_CONFIG;
use nodal_cli::{cmd_check, cmd_solve, cmd_sweep, Emit, Overrides, RunConfig};

/// Nodal radial bound states of the m-Laplacian by shooting.
#[derive(Parser)]
#[command(name = "nodal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate the bound state with k sign changes.
    Solve(Flags),
    /// Classify a grid of shooting parameters.
    Sweep(Flags),
    /// Landmarks and sampled hypothesis verdicts.
    Check(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Nonlinearity: g1, g2, double_power, log_critical, or e.g. "double_power(4,2)".
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    /// Dimension.
    #[arg(long = "N")]
    n: Option<f64>,
    /// Number of sign changes.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha_min: Option<f64>,
    #[arg(long)]
    alpha_max: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    tol_alpha: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv,json,gnuplot (or none).
    #[arg(long)]
    emit: Option<String>,
}

impl Flags {
    fn load(&self) -> anyhow::Result<RunConfig> {
        let over = Overrides {
            f: self.f.clone(),
            p: self.p,
            q: self.q,
            lambda: self.lambda,
            m: self.m,
            n: self.n,
            k: self.k,
            alpha_min: self.alpha_min,
            alpha_max: self.alpha_max,
            grid: self.grid,
            r_max: self.r_max,
            tol_alpha: self.tol_alpha,
            out: self.out.clone(),
            emit: self.emit.as_deref().map(Emit::parse_list).transpose()?,
        };
        RunConfig::load(self.config.as_deref(), &over)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (flags, run): (&Flags, fn(&RunConfig) -> anyhow::Result<nodal_cli::Outcome>) = match &cli.command {
        Command::Solve(f) => (f, cmd_solve),
        Command::Sweep(f) => (f, cmd_sweep),
        Command::Check(f) => (f, cmd_check),
    };
    let result = flags.load().and_then(|cfg| run(&cfg));
    match result {
        Ok(out) => {
            let mut so = std::io::stdout().lock();
            for line in &out.messages {
                let _ = writeln!(so, "{line}");
            }
            for path in &out.artifacts {
                let _ = writeln!(so, "wrote {}", path.display());
            }
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
