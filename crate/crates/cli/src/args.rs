//! Argument parsing for the two programs.

use std::ffi::OsString;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use abduce_core::constraint::{ZeroProbPolicy, DEFAULT_ZERO_EPSILON};
use abduce_core::generate::{BayesGenConfig, CostProfile, WaodagGenConfig};
use abduce_core::solver::Count;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::run::{generate, run, Command, GenSpec, ModelKind, RunConfig, Selection};
use crate::{CliError, EXIT_INPUT, EXIT_OK};

fn parse_count(s: &str) -> Result<Count, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Count::All);
    }
    match s.parse::<usize>() {
        Ok(0) => Err("k must be at least 1".into()),
        Ok(n) => Ok(Count::Top(n)),
        Err(_) => Err(format!("expected a positive integer or `all`, got `{s}`")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    All,
    Cardinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ZeroProbArg {
    Clamp,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Strict,
    Monotonic,
    Any,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Number of solutions, or `all`.
    #[arg(long, value_parser = parse_count, default_value = "all")]
    k: Count,
    /// Integrality tolerance of branch and bound.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Branch-and-bound nodes allowed per search.
    #[arg(long)]
    node_limit: Option<usize>,
}

#[derive(Debug, Args)]
struct GraphArgs {
    model: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    mode: ModeArg,
    /// Perturbation added to true costs of monotonic graphs in cardinal mode.
    #[arg(long)]
    delta: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct NetworkArgs {
    model: PathBuf,
    /// Observations as `Var=value,...`; repeatable.
    #[arg(long)]
    evidence: Vec<String>,
    /// JSON object mapping variables to observed values.
    #[arg(long)]
    evidence_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "clamp")]
    zero_prob: ZeroProbArg,
    /// Add `q <= A=a` rows instead of raising nonpositive costs.
    #[arg(long)]
    strict_permissibility: bool,
    /// Floor for nonpositive conditional costs.
    #[arg(long)]
    delta: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct GenGraphArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    max_hypotheses: usize,
    #[arg(long, default_value_t = 25)]
    max_nodes: usize,
    #[arg(long, default_value_t = 3)]
    max_parents: usize,
    #[arg(long, default_value_t = 10)]
    max_cost: i32,
    #[arg(long, value_enum, default_value = "monotonic")]
    profile: ProfileArg,
}

#[derive(Debug, Args)]
struct GenNetworkArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    max_variables: usize,
    #[arg(long, default_value_t = 3)]
    max_range: usize,
    #[arg(long, default_value_t = 2)]
    max_parents: usize,
    /// Allow probabilities of exactly 0 and 1.
    #[arg(long)]
    allow_extreme: bool,
}

#[derive(Debug, Subcommand)]
enum GenKind {
    /// Random layered AND/OR graph.
    Waodag(GenGraphArgs),
    /// Random Bayesian network.
    Bn(GenNetworkArgs),
}

#[derive(Debug, Subcommand)]
enum AbduceCommand {
    /// Print a least-cost explanation.
    Solve(GraphArgs),
    /// Print explanations in cost order.
    Enumerate(GraphArgs),
    /// Print explanations found by exhaustive search.
    Oracle(GraphArgs),
    /// Print the constraint system.
    Encode(GraphArgs),
    /// Print a seeded random model.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
}

/// Cost-based abduction over weighted AND/OR graphs.
#[derive(Debug, Parser)]
#[command(name = "abduce", version)]
struct AbduceCli {
    #[command(subcommand)]
    command: AbduceCommand,
}

#[derive(Debug, Subcommand)]
enum MpeCommand {
    /// Print a most probable explanation.
    Solve(NetworkArgs),
    /// Print complete instantiations by nonincreasing probability.
    Enumerate(NetworkArgs),
    /// Print instantiations found by exhaustive search.
    Oracle(NetworkArgs),
    /// Print the constraint system with evidence applied.
    Encode(NetworkArgs),
}

/// k-best most probable explanations of Bayesian networks.
#[derive(Debug, Parser)]
#[command(name = "mpe", version)]
struct MpeCli {
    #[command(subcommand)]
    command: MpeCommand,
}

fn apply_solver(cfg: &mut RunConfig, s: SolverArgs) {
    if cfg.command != Command::Solve {
        cfg.k = s.k;
    }
    cfg.tolerance = s.tolerance;
    cfg.node_limit = s.node_limit;
}

fn graph_config(command: Command, a: GraphArgs) -> RunConfig {
    let mut cfg = RunConfig::new(command, ModelKind::Waodag, a.model);
    cfg.selection = match a.mode {
        ModeArg::All => Selection::All,
        ModeArg::Cardinal => Selection::Cardinal,
    };
    cfg.delta = a.delta;
    apply_solver(&mut cfg, a.solver);
    cfg
}

fn network_config(command: Command, a: NetworkArgs) -> RunConfig {
    let mut cfg = RunConfig::new(command, ModelKind::Bayes, a.model);
    cfg.evidence = a.evidence;
    cfg.evidence_file = a.evidence_file;
    cfg.zero_prob = match a.zero_prob {
        ZeroProbArg::Clamp => ZeroProbPolicy::Clamp {
            epsilon: DEFAULT_ZERO_EPSILON,
        },
        ZeroProbArg::Reject => ZeroProbPolicy::Reject {
            epsilon: DEFAULT_ZERO_EPSILON,
        },
    };
    cfg.strict_permissibility = a.strict_permissibility;
    cfg.delta = a.delta;
    apply_solver(&mut cfg, a.solver);
    cfg
}

fn gen_spec(kind: GenKind) -> GenSpec {
    match kind {
        GenKind::Waodag(a) => GenSpec::Waodag {
            seed: a.seed,
            cfg: WaodagGenConfig {
                max_hypotheses: a.max_hypotheses,
                max_nodes: a.max_nodes,
                max_parents: a.max_parents,
                max_cost: a.max_cost,
                profile: match a.profile {
                    ProfileArg::Strict => CostProfile::Strict,
                    ProfileArg::Monotonic => CostProfile::Monotonic,
                    ProfileArg::Any => CostProfile::Any,
                },
            },
        },
        GenKind::Bn(a) => GenSpec::Bayes {
            seed: a.seed,
            cfg: BayesGenConfig {
                max_variables: a.max_variables,
                max_range: a.max_range,
                max_parents: a.max_parents,
                allow_extreme: a.allow_extreme,
            },
        },
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter("ABDUCE_LOG");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

fn execute(program: &str, job: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> i32 {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = job(&mut out).and_then(|()| out.flush().map_err(CliError::Output));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{program}: {e}");
            e.exit_code()
        }
    }
}

fn parse<P: Parser>(args: impl IntoIterator<Item = OsString>) -> Result<P, i32> {
    P::try_parse_from(args).map_err(|e| {
        let _ = e.print();
        if e.use_stderr() {
            EXIT_INPUT
        } else {
            EXIT_OK
        }
    })
}

pub fn abduce_main(args: impl IntoIterator<Item = OsString>) -> i32 {
    init_logging();
    let cli: AbduceCli = match parse(args) {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    let cfg = match cli.command {
        AbduceCommand::Solve(a) => graph_config(Command::Solve, a),
        AbduceCommand::Enumerate(a) => graph_config(Command::Enumerate, a),
        AbduceCommand::Oracle(a) => graph_config(Command::Oracle, a),
        AbduceCommand::Encode(a) => graph_config(Command::Encode, a),
        AbduceCommand::Gen { kind } => {
            let spec = gen_spec(kind);
            return execute("abduce", |out| generate(&spec, out));
        }
    };
    execute("abduce", |out| run(&cfg, out))
}

pub fn mpe_main(args: impl IntoIterator<Item = OsString>) -> i32 {
    init_logging();
    let cli: MpeCli = match parse(args) {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    let cfg = match cli.command {
        MpeCommand::Solve(a) => network_config(Command::Solve, a),
        MpeCommand::Enumerate(a) => network_config(Command::Enumerate, a),
        MpeCommand::Oracle(a) => network_config(Command::Oracle, a),
        MpeCommand::Encode(a) => network_config(Command::Encode, a),
    };
    execute("mpe", |out| run(&cfg, out))
}
