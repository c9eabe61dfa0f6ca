//! `klmc`: contraction curves, bias scans, planning, sampling and the
//! verification suite from the command line.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use klmc::KlmcError;

use output::Format;

const EXIT_HELP: &str = "\
EXIT STATUS:
  0  success
  1  usage error (bad flags, invalid values, I/O failure)
  2  parameter condition violated
  3  verification failure";

#[derive(Debug, Parser)]
#[command(name = "klmc", version, about = "Kinetic Langevin Monte Carlo workbench", after_help = EXIT_HELP)]
pub struct Cli {
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Format of tabular outputs. Reports are always JSON.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,

    /// RNG seed, decimal or 0x-prefixed hex.
    #[arg(long, global = true, env = "KLMC_SEED", default_value = "0x5EED", value_parser = parse_seed)]
    pub seed: u64,

    /// Worker threads for sweeps and chains (default: all cores). Results do
    /// not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// c⁻(r, ζ) curves and the contraction coefficient.
    #[command(after_help = "\
OUTPUTS:
  contract_zeta_<ζ>.csv   r, c_minus        (1024 points on (0, 1.2·r_max])
  contract_report.json    per-ζ r_max, r_lin and curve peak; the contraction
                          report when --h --gamma --eta --alpha --beta are all given")]
    Contract(ContractArgs),

    /// Bias bounds over a log-spaced step grid, one block per γ.
    #[command(after_help = "\
OUTPUTS:
  bias.csv   gamma, h, zeta, e_pos, e_mom, crossing, linear_condition_ok
             crossing is true on the inserted row at ζ = ζ* ≈ 1.69;
             linear_condition_ok reports the linearization condition")]
    Bias(BiasArgs),

    /// Step size and iteration count for a target accuracy.
    #[command(after_help = "\
OUTPUTS:
  plan.json   {plan, check: {e_pos, e_mom, bound, budget, ok}}
              the check re-evaluates the bias bounds at h* against 2ε/3")]
    Plan(PlanArgs),

    /// Run chains on a quadratic target with planner-chosen (h, n).
    #[command(after_help = "\
The target has d eigenvalues log-spaced in [alpha, beta] (isotropic when equal).
Chain i starts at the origin and uses RNG stream i.

OUTPUTS:
  trajectory_chain<i>.csv   step, x_0..x_{d-1}, v_0..v_{d-1}   (every --thin steps)
  sample_summary.json       h, steps, exact bias, per-chain pooled moments
                            E[x²], E[xv], E[v²] with batch-means standard errors,
                            and the exact stationary values")]
    Sample(SampleArgs),

    /// Randomized oracle sweeps, coupling and stationarity checks.
    #[command(after_help = "\
OUTPUTS:
  verify_report.json   per-suite outcome and constant audit
  verify_rows.csv      h, gamma, eta, lambda_or_alpha, beta, c_exact, rho_sq,
                       e_pos, e_mom, exact_bias, pass_flags
                       (failed checks in pass_flags carry a leading '!')")]
    Verify(VerifyArgs),

    /// Overdamped limit: fixed h_LMC = hη/γ, γ swept log-spaced.
    #[command(after_help = "\
OUTPUTS:
  limit.csv   gamma, h, zeta, c_tilde, e_pos, e_mom, c_limit, e_pos_limit, linear_condition_ok
              c_limit = h_LMC·α and e_pos_limit = √d·κ·√(h_LMC/2)")]
    Limit(LimitArgs),
}

#[derive(Debug, Args)]
pub struct ContractArgs {
    /// Comma-separated ζ values for the curves.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2", value_parser = positive)]
    pub zetas: Vec<f64>,
    #[arg(long, value_parser = positive)]
    pub h: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub gamma: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub eta: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub alpha: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BiasArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.2,1,5", value_parser = positive)]
    pub gammas: Vec<f64>,
    #[arg(long, default_value = "0.5", value_parser = positive)]
    pub eta: f64,
    #[arg(long, default_value = "10", value_parser = positive)]
    pub kappa: f64,
    /// Smoothness; α = β/κ. Only used for the linear_condition_ok column.
    #[arg(long, default_value = "1", value_parser = positive)]
    pub beta: f64,
    #[arg(long, default_value = "100")]
    pub d: usize,
    /// Grid points per γ, log-spaced in ζ over [1e-4, 1e3].
    #[arg(long, default_value = "200")]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long, default_value = "0.1", value_parser = positive)]
    pub alpha: f64,
    #[arg(long, default_value = "1", value_parser = positive)]
    pub beta: f64,
    #[arg(long, default_value = "100")]
    pub d: usize,
    #[arg(long, default_value = "0.05", value_parser = positive)]
    pub epsilon: f64,
    /// Friction (default √(27/2)).
    #[arg(long, value_parser = positive)]
    pub gamma: Option<f64>,
    /// Inverse mass (default 1/(2β)).
    #[arg(long, value_parser = positive)]
    pub eta: Option<f64>,
    #[arg(long, default_value = "1", value_parser = positive)]
    pub h0: f64,
    /// Upper bound on the initial distance to the stationary law.
    #[arg(long, default_value = "10", value_parser = positive)]
    pub w0: f64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Step size; overrides the planner.
    #[arg(long, value_parser = positive)]
    pub h: Option<f64>,
    /// Number of steps; overrides the planner.
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long, default_value = "1")]
    pub chains: usize,
    /// Trajectory thinning (default: about 1000 rows per chain).
    #[arg(long)]
    pub thin: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Sandwich sweep size; identity and audit sweeps use ten times this.
    #[arg(long, default_value = "1000")]
    pub instances: usize,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[arg(long, default_value = "0.1", value_parser = positive)]
    pub alpha: f64,
    #[arg(long, default_value = "1", value_parser = positive)]
    pub beta: f64,
    #[arg(long, default_value = "100")]
    pub d: usize,
    /// Overdamped step hη/γ (default 1/(2β)).
    #[arg(long, value_parser = positive)]
    pub h_lmc: Option<f64>,
    #[arg(long, default_value = "1", value_parser = positive)]
    pub gamma_min: f64,
    #[arg(long, default_value = "1e6", value_parser = positive)]
    pub gamma_max: f64,
    #[arg(long, default_value = "61")]
    pub points: usize,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed `{s}`: {e}"))
}

fn positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(format!("`{s}` must be finite and > 0"))
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Condition(String),
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Condition(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Condition(m) => write!(f, "condition violated: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<KlmcError> for CliError {
    fn from(e: KlmcError) -> Self {
        match e {
            KlmcError::ConditionViolated(_) | KlmcError::Unstable(_) => CliError::Condition(e.to_string()),
            KlmcError::InvalidParameter { .. }
            | KlmcError::DimensionMismatch { .. }
            | KlmcError::DegenerateStep { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Verification(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(e.to_string()))?;
    let sink = output::Sink::new(&cli.out, cli.format)?;
    pool.install(|| match &cli.command {
        Command::Contract(a) => commands::contract(a, &sink),
        Command::Bias(a) => commands::bias(a, &sink),
        Command::Plan(a) => commands::plan(a, &sink),
        Command::Sample(a) => commands::sample(a, cli.seed, &sink),
        Command::Verify(a) => commands::verify(a, cli.seed, &sink),
        Command::Limit(a) => commands::limit(a, &sink),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("klmc: {e}");
            ExitCode::from(e.code())
        }
    }
}
