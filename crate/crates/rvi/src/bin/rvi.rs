//! Command-line interface: model analysis, solving, policy simulation, and
//! benchmark-model generation.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rvi::dp::DpConfig;
use rvi::geometry::PruneConfig;
use rvi::io::cassandra::{parse_pomdp, serialize_pomdp};
use rvi::io::formats::{
    read_classification, read_vector_set, stats_csv, write_classification, write_vector_set,
};
use rvi::io::gen::{generate, GeneratorParams};
use rvi::model::PomdpModel;
use rvi::policy::{qmdp_policy, simulate, Policy, ValueFn};
use rvi::solvers::{
    classify_actions_heuristic, solve_infovi, solve_spvi, solve_ssvi, solve_vi,
    ActionClassification, SolveConfig, SolveResult, SolvedValue, SubsetMode, Termination,
};
use std::io::Read;
use std::process::ExitCode;
use std::time::Duration;

#[derive(Parser)]
#[command(
    name = "rvi",
    about = "Value iteration for POMDPs restricted to reachable belief subsets",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report per-pair matrix ranks, observation supports, and a suggested
    /// action classification for a model.
    Analyze {
        /// Model file in the standard POMDP text format ("-" for stdin).
        model: String,
    },
    /// Run a solver on a model.
    Solve(SolveArgs),
    /// Evaluate a policy by Monte-Carlo simulation.
    Simulate(SimArgs),
    /// Generate a benchmark model file.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Vi,
    Ssvi,
    Infovi,
    Spvi,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Collective,
    Individual,
}

#[derive(Args)]
struct SolveArgs {
    /// Model file ("-" for stdin).
    model: String,
    #[arg(long, value_enum)]
    algo: Algo,
    /// Subset-walk mode for ssvi.
    #[arg(long, value_enum, default_value = "collective")]
    mode: Mode,
    /// Quality target.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    deadline: Option<f64>,
    /// Action classification file (one `name rich|poor` line per action);
    /// overrides the heuristic for spvi.
    #[arg(long)]
    classes: Option<String>,
    /// Write the final alpha-vector set here.
    #[arg(long)]
    out: Option<String>,
    /// Write per-iteration statistics here as CSV.
    #[arg(long)]
    stats: Option<String>,
    /// Recorded with the run; the solvers themselves are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Abort when a DP update would enumerate more vectors than this.
    #[arg(long, default_value_t = rvi::dp::DEFAULT_ENUM_CAP)]
    enum_cap: usize,
    /// Interleave pruning with the per-observation cross sums.
    #[arg(long)]
    incremental: bool,
}

#[derive(Args)]
struct SimArgs {
    /// Model file ("-" for stdin).
    model: String,
    /// Alpha-vector set file, or the literal "qmdp" for the baseline.
    value: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 100)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Problem {
    Example3,
    Maze1,
    Maze2,
    Elevator,
    Office,
    Random,
    Grid,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    problem: Problem,
    /// Output file ("-" for stdout).
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// random: state count.
    #[arg(long, default_value_t = 3)]
    states: usize,
    /// random: action count.
    #[arg(long, default_value_t = 2)]
    actions: usize,
    /// random: observation count.
    #[arg(long, default_value_t = 2)]
    observations: usize,
    /// random: probability of zeroing a table entry.
    #[arg(long, default_value_t = 0.2)]
    sparsity: f64,
    /// grid: rows.
    #[arg(long, default_value_t = 3)]
    rows: usize,
    /// grid: columns.
    #[arg(long, default_value_t = 3)]
    cols: usize,
    /// elevator: traffic patterns.
    #[arg(long, default_value_t = 3)]
    patterns: usize,
    /// elevator: request bits (1..=4).
    #[arg(long, default_value_t = 4)]
    request_bits: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn read_input(path: &str) -> Result<String, String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| format!("reading stdin: {e}"))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("reading {path}: {e}"))
    }
}

fn load_model(path: &str) -> Result<PomdpModel, String> {
    let text = read_input(path)?;
    let out = parse_pomdp(&text).map_err(|e| e.to_string())?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    Ok(out.model)
}

fn write_output(path: &str, content: &str) -> Result<(), String> {
    if path == "-" {
        print!("{content}");
        Ok(())
    } else {
        std::fs::write(path, content).map_err(|e| format!("writing {path}: {e}"))
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Analyze { model } => {
            let m = load_model(&model)?;
            analyze(&m);
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve(args) => solve(args),
        Command::Simulate(args) => do_simulate(args),
        Command::Gen(args) => {
            let params = match args.problem {
                Problem::Example3 => GeneratorParams::Example3,
                Problem::Maze1 => GeneratorParams::Maze1,
                Problem::Maze2 => GeneratorParams::Maze2,
                Problem::Elevator => GeneratorParams::Elevator {
                    patterns: args.patterns,
                    request_bits: args.request_bits,
                },
                Problem::Office => GeneratorParams::Office,
                Problem::Random => GeneratorParams::Random {
                    seed: args.seed,
                    num_states: args.states,
                    num_actions: args.actions,
                    num_observations: args.observations,
                    sparsity: args.sparsity,
                },
                Problem::Grid => GeneratorParams::NearDiscernibleGrid {
                    seed: args.seed,
                    rows: args.rows,
                    cols: args.cols,
                },
            };
            let m = generate(&params).map_err(|e| e.to_string())?;
            write_output(&args.out, &serialize_pomdp(&m))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn analyze(m: &PomdpModel) {
    println!(
        "states: {}  actions: {}  observations: {}  discount: {}",
        m.num_states(),
        m.num_actions(),
        m.num_observations(),
        m.discount()
    );
    let prop = m.analyze_properness();
    println!(
        "properness: {}",
        if prop.proper { "proper" } else { "not proper" }
    );
    for p in &prop.pairs {
        println!(
            "  matrix a={} ({}) z={} ({}): rank {}/{}{}",
            p.action,
            m.action_names[p.action],
            p.observation,
            m.observation_names[p.observation],
            p.rank,
            m.num_states(),
            if p.degenerate { " degenerate" } else { "" }
        );
    }
    let info = m.informativeness_report();
    println!("informativeness: max support size {}", info.max_size);
    for e in &info.entries {
        if !e.states.is_empty() {
            println!(
                "  support a={} z={}: {} state(s)",
                e.action,
                e.observation,
                e.states.len()
            );
        }
    }
    let classes = classify_actions_heuristic(m, 0.5);
    let rich: Vec<bool> = (0..m.num_actions()).map(|a| classes.is_rich(a)).collect();
    println!("suggested classification:");
    print!("{}", indent(&write_classification(&m.action_names, &rich)));
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("  {l}\n")).collect()
}

fn solve(args: SolveArgs) -> Result<ExitCode, String> {
    let m = load_model(&args.model)?;
    let cfg = SolveConfig {
        epsilon: args.epsilon,
        max_iterations: args.max_iter,
        deadline: args.deadline.map(Duration::from_secs_f64),
        mode: match args.mode {
            Mode::Collective => SubsetMode::Collective,
            Mode::Individual => SubsetMode::Individual,
        },
        dp: DpConfig {
            enum_cap: args.enum_cap,
            incremental: args.incremental,
            prune: PruneConfig::default(),
        },
        ..SolveConfig::default()
    };
    let result: SolveResult = match args.algo {
        Algo::Vi => solve_vi(&m, &cfg),
        Algo::Ssvi => solve_ssvi(&m, &cfg),
        Algo::Infovi => solve_infovi(&m, &cfg),
        Algo::Spvi => {
            let classes = match &args.classes {
                Some(path) => {
                    let text = read_input(path)?;
                    let rich = read_classification(&text, &m.action_names)
                        .map_err(|e| e.to_string())?;
                    ActionClassification::from_flags(&m, &rich)
                }
                None => classify_actions_heuristic(&m, 0.5),
            };
            solve_spvi(&m, &cfg, &classes)
        }
    }
    .map_err(|e| e.to_string())?;

    println!(
        "termination: {}  iterations: {}  residual: {:.6e}  vectors: {}  (seed {})",
        result.termination,
        result.iterations,
        result.residual,
        result.value.total_vectors(),
        args.seed
    );
    if let Some(path) = &args.out {
        let text = match &result.value {
            SolvedValue::Set(set) => write_vector_set(set),
            SolvedValue::Family(fam) => fam
                .entries
                .iter()
                .map(|e| write_vector_set(&e.set))
                .collect::<Vec<_>>()
                .join("---\n"),
        };
        write_output(path, &text)?;
    }
    if let Some(path) = &args.stats {
        write_output(path, &stats_csv(&result.stats))?;
    }
    Ok(match result.termination {
        Termination::ResidualMet | Termination::AllInformationRich => ExitCode::SUCCESS,
        Termination::IterationCap => ExitCode::from(2),
        Termination::ResourceAbort => ExitCode::from(3),
    })
}

fn do_simulate(args: SimArgs) -> Result<ExitCode, String> {
    let m = load_model(&args.model)?;
    let report = if args.value == "qmdp" {
        let p = qmdp_policy(&m);
        simulate(&m, &p, args.trials, args.horizon, args.seed)
    } else {
        let set = read_vector_set(&read_input(&args.value)?).map_err(|e| e.to_string())?;
        if set.dim != m.num_states() {
            return Err(format!(
                "vector set dimension {} does not match the model's {} states",
                set.dim,
                m.num_states()
            ));
        }
        let p = Policy::Improving {
            model: &m,
            value: ValueFn::Set(&set),
        };
        simulate(&m, &p, args.trials, args.horizon, args.seed)
    }
    .map_err(|e| e.to_string())?;
    println!("{report}");
    println!("trials,horizon,mean,std_error,seed");
    println!("{}", report.csv_row());
    Ok(ExitCode::SUCCESS)
}
