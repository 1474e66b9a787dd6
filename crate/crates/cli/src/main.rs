mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use commands::{TimeArg, UsageError};

/// State-preparation circuits for scar states of the constrained spin chain.
#[derive(Debug, Parser)]
#[command(name = "scarforge", version)]
struct Cli {
    /// Also write a figure-ready CSV curve to PATH.
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Add wall-clock time to the report (makes it non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Circuits for the |ξ⟩ family.
    #[command(subcommand)]
    Xi(XiCommand),
    /// Circuits for individual scar states |S_k⟩.
    #[command(subcommand)]
    Sk(SkCommand),
    /// Adiabatic preparation of |ξ=1⟩.
    #[command(subcommand)]
    Adiabatic(AdiabaticCommand),
    /// Exact checks of tower dynamics.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Debug, Subcommand)]
enum XiCommand {
    /// Linear-depth circuit on the N−2 interior sites.
    Linear(XiLinear),
    /// Blocks joined by ancilla Toffolis and postselection.
    Stitch(XiStitch),
}

#[derive(Debug, Args)]
struct XiLinear {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    /// Omit the alternating signs.
    #[arg(long)]
    tilde: bool,
    /// Write the circuit as .qc.json.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Debug, Args)]
struct XiStitch {
    #[arg(long)]
    n: usize,
    /// Block length m; N−2 must be a multiple of it.
    #[arg(long)]
    block: usize,
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    #[arg(long)]
    tilde: bool,
    /// Sample the ancillas this many times.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Debug, Subcommand)]
enum SkCommand {
    /// Sequential isometry compilation of the projected Dicke MPS.
    Mps(SkMps),
    /// Variational staircase ansatz with random restarts.
    Variational(SkVariational),
    /// Exact circuit for k = N/2 − 1.
    Kmax(SkKmax),
}

#[derive(Debug, Args)]
struct SkMps {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Debug, Args)]
struct SkVariational {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 2000)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stop once a restart gets below this infidelity.
    #[arg(long, default_value_t = 1e-12)]
    stop_below: f64,
    /// Fail unless the best infidelity is at most this.
    #[arg(long)]
    max_infidelity: Option<f64>,
    /// Use central finite differences instead of adjoint gradients.
    #[arg(long)]
    finite_difference: bool,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SkKmax {
    #[arg(long)]
    n: usize,
    /// Emit the k_max-qubit encoded circuit.
    #[arg(long)]
    compressed: bool,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Debug, Subcommand)]
enum AdiabaticCommand {
    /// Evolve under H(s) for one or more total times.
    Sweep(Sweep),
    /// Instantaneous gap along the sweep, or its 1/N extrapolation.
    Gap(Gap),
    /// Shortest total time reaching the target fidelity.
    Tstar(Tstar),
}

#[derive(Debug, Args)]
struct Sweep {
    #[arg(long)]
    n: usize,
    /// Total times, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Fail if the final fidelity is below this.
    #[arg(long)]
    min_fidelity: Option<f64>,
}

#[derive(Debug, Args)]
struct Gap {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Chain lengths for the quadratic fit of the s = T gap in 1/N.
    #[arg(long, value_delimiter = ',')]
    fit: Vec<usize>,
}

#[derive(Debug, Args)]
struct Tstar {
    /// Chain lengths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0.99)]
    target: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 100.0)]
    t_max: f64,
}

#[derive(Debug, Subcommand)]
enum VerifyCommand {
    /// |⟨ξ|e^{−iH₀t}|ξ⟩| from the tower decomposition.
    Revival(Revival),
    /// Magnetization measurement on |ξ⟩.
    ProjectMz(ProjectMz),
}

#[derive(Debug, Args)]
struct Revival {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    j: f64,
    /// Time, or `auto` for one revival period.
    #[arg(long, default_value = "auto")]
    t: TimeArg,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Debug, Args)]
struct ProjectMz {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

impl Command {
    fn has_csv(&self) -> bool {
        match self {
            Command::Xi(_) | Command::Sk(SkCommand::Mps(_) | SkCommand::Kmax(_)) => false,
            Command::Verify(VerifyCommand::ProjectMz(_)) => false,
            Command::Adiabatic(AdiabaticCommand::Gap(g)) => g.n.is_some(),
            _ => true,
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SCARFORGE_THREADS") {
        let threads: usize = v
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| UsageError(format!("SCARFORGE_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    if cli.csv.is_some() && !cli.command.has_csv() {
        return Err(UsageError("this command has no CSV output".into()).into());
    }
    let start = Instant::now();
    let (mut report, csv) = match cli.command {
        Command::Xi(XiCommand::Linear(a)) => commands::xi_linear(&a)?,
        Command::Xi(XiCommand::Stitch(a)) => commands::xi_stitch(&a)?,
        Command::Sk(SkCommand::Mps(a)) => commands::sk_mps(&a)?,
        Command::Sk(SkCommand::Variational(a)) => commands::sk_variational(&a)?,
        Command::Sk(SkCommand::Kmax(a)) => commands::sk_kmax(&a)?,
        Command::Adiabatic(AdiabaticCommand::Sweep(a)) => commands::adiabatic_sweep(&a)?,
        Command::Adiabatic(AdiabaticCommand::Gap(a)) => commands::adiabatic_gap(&a)?,
        Command::Adiabatic(AdiabaticCommand::Tstar(a)) => commands::adiabatic_tstar(&a)?,
        Command::Verify(VerifyCommand::Revival(a)) => commands::verify_revival(&a)?,
        Command::Verify(VerifyCommand::ProjectMz(a)) => commands::verify_project_mz(&a)?,
    };
    if cli.timing {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    if let (Some(path), Some(text)) = (&cli.csv, csv) {
        std::fs::write(path, text).map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?;
    }
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
        _ => {}
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
