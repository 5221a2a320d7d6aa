//! Command-line front end: run or batch scenarios, run the verification
//! suite and enumerate toy fixtures.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 verification
//! failure, 3 runtime failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::Error;
use crate::planner::{
    Budget, PlannerConfig, Solver, DEFAULT_ALPHA_O, DEFAULT_HORIZON, DEFAULT_N_PARTICLES,
    DEFAULT_PRUNE_BUDGET, DEFAULT_TIME_BUDGET_S, DEFAULT_UCB_C,
};
use crate::scenario::{run_trial, scenario_config, trial_seed, ScenarioConfig, TrialRecord, CSV_HEADER, SCENARIOS};
use crate::stats;
use crate::verification::{enumerate_exact, fixture_path, lemma_suite, OpenLoopPolicy, ToyPomdp};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hbmcp", version, about = "Hybrid-belief Monte Carlo planning under ambiguous data association")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run trials of one solver on a scenario.
    Run(RunArgs),
    /// Run the same trials with several solvers and print a comparison.
    Batch(BatchArgs),
    /// Run the estimator verification suite on a toy fixture.
    Verify(VerifyArgs),
    /// Enumerate a toy fixture exactly and print its beliefs and value.
    Enumerate(EnumerateArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Built-in scenario: aliased_matrix, kidnapped_robot or goal_reaching.
    #[arg(long, default_value = "aliased_matrix", conflicts_with = "config")]
    pub scenario: String,
    /// Scenario config file (TOML) instead of a built-in scenario.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Size of the built-in scenario, in (0, 1].
    #[arg(long, default_value = "1.0")]
    pub scale: f64,
    /// Macro-steps per episode (defaults to the scenario's).
    #[arg(long)]
    pub episode_length: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for per-trial JSON records and the CSV tables.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for trial-level parallelism (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Store planning wall time in the records (makes outputs
    /// non-reproducible).
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(Debug, Args)]
pub struct PlannerArgs {
    /// Iterations per planning step.
    #[arg(long, conflicts_with = "time_budget_s")]
    pub iterations: Option<u64>,
    /// Wall-clock seconds per planning step (T_m).
    #[arg(long, default_value_t = DEFAULT_TIME_BUDGET_S)]
    pub time_budget_s: f64,
    /// Lookahead horizon.
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: usize,
    /// UCB exploration constant c.
    #[arg(long, default_value_t = DEFAULT_UCB_C)]
    pub ucb_c: f64,
    /// State particles per belief node (N_x).
    #[arg(long, default_value_t = DEFAULT_N_PARTICLES)]
    pub n_particles: usize,
    /// Observation progressive widening multiplier (k_o).
    #[arg(long, default_value = "2.0")]
    pub k_o: f64,
    /// Observation progressive widening exponent (alpha_o).
    #[arg(long, default_value_t = DEFAULT_ALPHA_O)]
    pub alpha_o: f64,
    /// Hypotheses kept per node by the pruning solvers (M).
    #[arg(long, default_value_t = DEFAULT_PRUNE_BUDGET)]
    pub prune_budget: usize,
}

impl PlannerArgs {
    pub fn config(&self, seed: u64) -> PlannerConfig {
        PlannerConfig {
            ucb_c: self.ucb_c,
            horizon: self.horizon,
            k_o: self.k_o,
            alpha_o: self.alpha_o,
            n_particles: self.n_particles,
            budget: match self.iterations {
                Some(n) => Budget::Iterations(n),
                None => Budget::Seconds(self.time_budget_s),
            },
            prune_budget: self.prune_budget,
            seed,
            ..PlannerConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// hbmcp, vanilla, pft-dpw or dabsp.
    #[arg(long, default_value = "hbmcp")]
    pub solver: String,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub planner: PlannerArgs,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// Comma-separated solvers.
    #[arg(long, default_value = "hbmcp,vanilla,pft-dpw,dabsp")]
    pub solvers: String,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub planner: PlannerArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite to run; `lemmas` checks the estimator claims.
    #[arg(long, default_value = "lemmas")]
    pub suite: String,
    /// Toy fixture (defaults to the bundled one).
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    /// Independent Monte Carlo runs per estimator.
    #[arg(long, default_value_t = 10_000)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report as CSV here as well.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub fixture: Option<PathBuf>,
}

/// Outcome of a command that did not succeed.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Verification(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Verification(_) => EXIT_VERIFY,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::UnknownScenario(_) | Error::EnumerationTooLarge { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

/// Parse `args` (including the program name), run and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Verification(m) => eprintln!("verification failed: {m}"),
                Failure::Runtime(m) => eprintln!("runtime failure: {m}"),
            }
            f.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Run(a) => {
            let solver = parse_solver(&a.solver)?;
            let summary = run_solvers(&a.scenario, &a.planner, &[solver])?;
            print!("{summary}");
            Ok(())
        }
        Command::Batch(a) => {
            let solvers = a.solvers.split(',').map(|s| parse_solver(s.trim())).collect::<Result<Vec<_>, _>>()?;
            let summary = run_solvers(&a.scenario, &a.planner, &solvers)?;
            print!("{summary}");
            Ok(())
        }
        Command::Verify(a) => verify(a),
        Command::Enumerate(a) => enumerate(a),
    }
}

fn parse_solver(s: &str) -> Result<Solver, Failure> {
    Solver::parse(s).ok_or_else(|| Failure::Usage(format!("unknown solver '{s}'")))
}

pub fn load_scenario(args: &ScenarioArgs) -> Result<ScenarioConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => ScenarioConfig::load(path).map_err(|e| match e {
            Error::Io(m) => Failure::Usage(format!("{}: {m}", path.display())),
            other => other.into(),
        })?,
        None => {
            if !SCENARIOS.contains(&args.scenario.as_str()) {
                return Err(Failure::Usage(format!(
                    "unknown scenario '{}' (expected one of {})",
                    args.scenario,
                    SCENARIOS.join(", ")
                )));
            }
            scenario_config(&args.scenario, args.scale, args.seed)?
        }
    };
    if let Some(n) = args.episode_length {
        config.episode_length = n;
    }
    config.validate()?;
    Ok(config)
}

/// Write `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

/// Mean and sample standard deviation of cumulative rewards per solver, in
/// the layout of a comparison table.
pub fn summary_table(scenario: &str, rows: &[(Solver, Vec<TrialRecord>)]) -> String {
    let mut s = String::from("scenario,solver,trials,failures,mean_cumulative_reward,std_cumulative_reward\n");
    for (solver, records) in rows {
        let rewards: Vec<f64> = records.iter().map(|r| r.cumulative_reward).collect();
        let failures = records.iter().filter(|r| r.failure.is_some()).count();
        s.push_str(&format!(
            "{scenario},{solver},{},{failures},{:.6},{:.6}\n",
            records.len(),
            stats::mean(&rewards),
            stats::std_dev(&rewards)
        ));
    }
    s
}

fn run_solvers(scenario: &ScenarioArgs, planner: &PlannerArgs, solvers: &[Solver]) -> Result<String, Failure> {
    if scenario.trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let config = load_scenario(scenario)?;
    let planner_config = planner.config(scenario.seed);
    planner_config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(scenario.jobs)
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;

    let mut rows = Vec::new();
    for &solver in solvers {
        let records: Vec<TrialRecord> = pool.install(|| {
            (0..scenario.trials)
                .into_par_iter()
                .map(|t| {
                    run_trial(&config, solver, &planner_config, t, trial_seed(scenario.seed, t), scenario.record_timing)
                })
                .collect::<crate::Result<_>>()
        })?;
        let mut csv = format!("{CSV_HEADER}\n");
        for r in &records {
            let path = scenario.out.join(format!("{}_{}_trial{:03}.json", config.name, solver, r.trial));
            write_atomic(&path, &r.to_json()).map_err(|e| Failure::Runtime(e.to_string()))?;
            for row in r.csv_rows() {
                csv.push_str(&row);
                csv.push('\n');
            }
            if let Some(f) = &r.failure {
                eprintln!("trial {} ({solver}) failed: {f}", r.trial);
            }
        }
        write_atomic(&scenario.out.join(format!("{}_{}.csv", config.name, solver)), &csv)
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        rows.push((solver, records));
    }
    let summary = summary_table(&config.name, &rows);
    write_atomic(&scenario.out.join(format!("{}_summary.csv", config.name)), &summary)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(summary)
}

fn load_toy(fixture: &Option<PathBuf>) -> Result<ToyPomdp, Failure> {
    let path = fixture.clone().unwrap_or_else(|| fixture_path("toy_aliased.toml"));
    ToyPomdp::load(&path).map_err(|e| match e {
        Error::Io(m) => Failure::Usage(format!("{}: {m}", path.display())),
        other => other.into(),
    })
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    if args.suite != "lemmas" {
        return Err(Failure::Usage(format!("unknown suite '{}' (expected lemmas)", args.suite)));
    }
    if args.runs < 2 {
        return Err(Failure::Usage("--runs must be at least 2".into()));
    }
    let toy = load_toy(&args.fixture)?;
    let checks = lemma_suite(&toy, args.runs, args.seed)?;
    let mut csv = String::from("check,pass,detail\n");
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        csv.push_str(&format!("{},{},\"{}\"\n", c.name, c.pass, c.detail));
    }
    if let Some(out) = &args.out {
        write_atomic(out, &csv).map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(failed.join(", ")))
    }
}

fn enumerate(args: &EnumerateArgs) -> Result<(), Failure> {
    let toy = load_toy(&args.fixture)?;
    let policy = toy
        .policy
        .clone()
        .ok_or_else(|| Failure::Usage("fixture has no [policy] to enumerate".into()))?;
    let exact = enumerate_exact(&toy, &policy)?;
    println!("actions,observations,prob,reward,weights");
    for n in &exact.nodes {
        let w: Vec<String> = n.weights.iter().map(|(p, w)| format!("{p:?}={w:.6}")).collect();
        println!("{:?},{:?},{:.9},{:.9},\"{}\"", n.actions, n.observations, n.prob, n.reward, w.join(" "));
    }
    println!("value,{:.12}", exact.value);
    println!("leaf_mass,{:.12}", exact.leaf_mass);
    if let Some(h) = &toy.history {
        let mut acts = h.actions.clone();
        acts.resize(toy.horizon, 0);
        let fixed = enumerate_exact(&toy, &OpenLoopPolicy::deterministic(&acts, toy.num_actions()))?;
        if let Some(node) = fixed.node(&h.actions, &h.observations) {
            println!("history_reward,{:.12}", node.reward);
        }
    }
    Ok(())
}
