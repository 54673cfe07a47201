//! `cogwyn`: command-line access to the multiplexing-gain formulas, plan
//! certification, converse checks and rate experiments of `cogwyn-core`.
//!
//! Data goes to standard output in JSON, CSV or table form; diagnostics go
//! to standard error. The exit code is 0 on success, 1 when a verification
//! fails and 2 for invalid input.

mod commands;
mod output;
mod sweep;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cogwyn_core::dofcalc::ThresholdRule;
use cogwyn_core::Topology;

use output::{CliError, Format, Report};

/// Multiplexing gain of cognitive Wyner networks with clustered decoding.
#[derive(Debug, Parser)]
#[command(name = "cogwyn", version, about)]
pub struct Cli {
    /// Output format (each command has its own default).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

/// The instance: flags or a JSON file.
#[derive(Debug, Args, Clone)]
pub struct InstanceArgs {
    /// JSON instance file (`K`, `t_left`, `t_right`, `r_left`, `r_right`,
    /// `topology`, `gains`); replaces the parameter flags.
    #[arg(long, conflicts_with_all = ["k", "tl", "tr", "rl", "rr", "topology"])]
    pub instance: Option<PathBuf>,

    /// Number of transmitter/receiver pairs.
    #[arg(long = "K", id = "k")]
    pub k: Option<usize>,

    /// Messages known from the left (t_ℓ).
    #[arg(long, default_value_t = 0)]
    pub tl: usize,

    /// Messages known from the right (t_r).
    #[arg(long, default_value_t = 0)]
    pub tr: usize,

    /// Antennas observed on the left (r_ℓ).
    #[arg(long, default_value_t = 0)]
    pub rl: usize,

    /// Antennas observed on the right (r_r).
    #[arg(long, default_value_t = 0)]
    pub rr: usize,

    /// Interference topology: `asym` or `sym`.
    #[arg(long)]
    pub topology: Option<Topology>,

    /// Common cross-gain: a decimal, a fraction or `root:p:k` (the k-th
    /// positive root of u_p, prefix `-` to negate).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,

    /// Draw generic cross-gains from the continuous law (seeded by `--seed`).
    #[arg(long, conflicts_with = "alpha")]
    pub random_gains: bool,
}

/// Genie families of the `converse` and `entropy` commands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Asym,
    Ub1,
    Ub2,
    Ub3,
    Offset,
}

/// Threshold rule flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Statement,
    Prose,
}

impl From<RuleArg> for ThresholdRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Statement => ThresholdRule::Statement,
            RuleArg::Prose => ThresholdRule::Prose,
        }
    }
}

/// Plan constructions of the `plan` command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConstructionArg {
    /// The applicable construction with the largest claim.
    Auto,
    /// The balanced symmetric construction.
    Balanced,
    Lb1,
    Lb2,
    Lb3,
    Lb4,
}

/// Genie construction shared by `converse` and `entropy`.
#[derive(Debug, Args, Clone)]
pub struct GenieArgs {
    /// Genie family.
    #[arg(long, value_enum)]
    pub family: FamilyArg,

    /// Tail threshold rule; defaults to `statement` for ub1 and `prose` for
    /// ub2/ub3, the rules their constructions support.
    #[arg(long, value_enum)]
    pub threshold_rule: Option<RuleArg>,

    #[command(flatten)]
    pub instance: InstanceArgs,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multiplexing-gain interval of an instance.
    Mg(InstanceArgs),
    /// Every lower and upper bound of a symmetric instance with its applicability.
    Bounds {
        /// Tail threshold rule of the upper bounds.
        #[arg(long, value_enum, default_value = "statement")]
        threshold_rule: RuleArg,
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Real roots of u_p with multiplicities.
    Roots {
        /// Order of the determinant.
        #[arg(long)]
        p: usize,
    },
    /// Transmission plan as JSON.
    Plan {
        /// Which construction to build.
        #[arg(long, value_enum, default_value = "auto")]
        construction: ConstructionArg,
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Certifies a plan (from `--plan`, or the best plan of the instance).
    Certify {
        /// Plan JSON file as written by `plan`; `-` reads standard input.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Builds a genie partition and replays its reconstruction identities.
    Converse {
        /// Random trials of the replay.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Largest accepted absolute error.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        genie: GenieArgs,
    },
    /// Checks that the genie noises leave a nonsingular conditional covariance.
    Entropy {
        #[command(flatten)]
        genie: GenieArgs,
    },
    /// Sum rate of a plan over a power grid (CSV: P, sum_rate_nats, plan_id).
    Simulate {
        /// Plan JSON file; the best plan of the instance when omitted.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Smallest power.
        #[arg(long, default_value_t = 1e3)]
        pmin: f64,
        /// Largest power.
        #[arg(long, default_value_t = 1e14)]
        pmax: f64,
        /// Number of grid points.
        #[arg(long, default_value_t = 12)]
        points: usize,
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Offset proxy approaching a critical gain (CSV: alpha, offset_proxy).
    Offset {
        /// Side-information order L = t_ℓ + r_ℓ.
        #[arg(long, default_value_t = 2)]
        l: usize,
        /// Number of pairs, of the form q(L+2) − 1.
        #[arg(long = "K", default_value_t = 7)]
        k: usize,
        /// The critical gain, a root of u_{L+1}.
        #[arg(long, default_value = "root:3:1", allow_hyphen_values = true)]
        alpha_star: String,
        /// Smallest exponent e of the offsets 2^-e.
        #[arg(long, default_value_t = 3)]
        emin: i32,
        /// Largest exponent e of the offsets 2^-e.
        #[arg(long, default_value_t = 12)]
        emax: i32,
        /// Approach the root from below instead of from above.
        #[arg(long)]
        below: bool,
        /// Power at which the proxy is evaluated.
        #[arg(long, default_value_t = 1e14)]
        power: f64,
    },
    /// Runs checks over a parameter grid read from a JSON spec, one row per instance.
    Sweep {
        /// Sweep spec JSON file.
        #[arg(long)]
        spec: PathBuf,
        /// Worker threads (0 uses every core).
        #[arg(long, env = "COGWYN_JOBS", default_value_t = 0)]
        jobs: usize,
    },
    /// Full-rank check of every contiguous principal block under random gains.
    RandomCheck {
        /// Number of pairs.
        #[arg(long = "K")]
        k: usize,
        /// Interference topology: `asym` or `sym`.
        #[arg(long, default_value = "sym")]
        topology: Topology,
        /// Number of seeded trials.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Check this common gain instead of random draws.
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
    },
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let seed = cli.seed;
    match &cli.command {
        Command::Mg(inst) => commands::mg(inst, seed),
        Command::Bounds { threshold_rule, instance } => commands::bounds(instance, seed, (*threshold_rule).into()),
        Command::Roots { p } => commands::roots(*p),
        Command::Plan { construction, instance } => commands::plan(instance, seed, *construction),
        Command::Certify { plan, instance } => commands::certify(plan.as_deref(), instance, seed),
        Command::Converse { trials, tol, genie } => commands::converse(genie, seed, *trials, *tol),
        Command::Entropy { genie } => commands::entropy(genie, seed),
        Command::Simulate { plan, pmin, pmax, points, instance } => {
            commands::simulate(plan.as_deref(), instance, seed, (*pmin, *pmax, *points))
        }
        Command::Offset { l, k, alpha_star, emin, emax, below, power } => {
            commands::offset(*l, *k, alpha_star, *emin..=*emax, *below, *power)
        }
        Command::Sweep { spec, jobs } => sweep::run(spec, *jobs, seed),
        Command::RandomCheck { k, topology, trials, alpha } => {
            commands::random_check(*k, *topology, *trials, alpha.as_deref(), seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.code);
        }
    };
    for line in &report.diagnostics {
        eprintln!("{line}");
    }
    let text = match report.render(cli.format) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.code);
        }
    };
    let mut out = std::io::stdout().lock();
    if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
        return ExitCode::from(2);
    }
    if report.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
