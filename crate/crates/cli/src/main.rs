//! `opinion`: run, check and compare opinion dynamics scenarios.
//!
//! Exit codes: 0 on success, 1 on validation or precondition failure
//! (including bad command lines), 2 on I/O failure.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use opinion_core::analysis::{classify_limit, left_stationary_vector};
use opinion_core::dynamics::SusceptibilityKind;
use opinion_core::graph::{
    find_window_length, validate_weight_matrix, verify_repeated_joint_connectivity, GraphError, ScheduleKind,
    WeightMatrix,
};
use opinion_core::scenario::{
    read_document, run_scenario, write_summary, write_trajectory, Scenario, ScenarioError, ScenarioRun, DEFAULT_BETA,
};

#[derive(Debug, Parser)]
#[command(
    name = "opinion",
    version,
    about = "Opinion dynamics with opinion-dependent susceptibility"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for CSV and JSON outputs.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the consensus threshold on max - min.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Overrides the step limit.
    #[arg(long, global = true)]
    max_steps: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its trajectory CSV and summary JSON.
    Simulate { scenario: PathBuf },
    /// Validate a dense matrix file or a scenario document (`.json`).
    Validate {
        input: PathBuf,
        /// Floor for nonzero weights when checking a matrix file.
        #[arg(long, default_value_t = DEFAULT_BETA)]
        beta: f64,
    },
    /// Predict the consensus value from the initial opinions.
    Classify {
        scenario: PathBuf,
        /// Window length to verify instead of the automatic check.
        #[arg(long, requires = "q")]
        p: Option<usize>,
        #[arg(long, requires = "p")]
        q: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
    },
    /// Check repeated joint strong connectivity of the schedule.
    Connectivity {
        scenario: PathBuf,
        #[arg(long, required_unless_present = "search_p")]
        p: Option<usize>,
        #[arg(long, default_value_t = 1)]
        q: usize,
        #[arg(long)]
        horizon: usize,
        /// Search for the smallest window length instead of checking `--p`.
        #[arg(long)]
        search_p: bool,
    },
    /// Run DeGroot and a stubborn kind on the same opinions and schedule.
    Compare {
        scenario: PathBuf,
        /// Kind to compare against DeGroot; defaults to the scenario's kind,
        /// or stubborn-positive when that is DeGroot.
        #[arg(long, value_enum)]
        kind: Option<CompareKind>,
    },
    /// DeGroot consensus value from the left eigenvector of a static W.
    Oracle { scenario: PathBuf },
}

// Variant names double as the `--kind` values.
#[allow(clippy::enum_variant_names)]
#[derive(Debug, Clone, Copy, ValueEnum)]
enum CompareKind {
    StubbornPositive,
    StubbornNeutral,
    StubbornExtremist,
}

impl From<CompareKind> for SusceptibilityKind {
    fn from(k: CompareKind) -> Self {
        match k {
            CompareKind::StubbornPositive => SusceptibilityKind::StubbornPositive,
            CompareKind::StubbornNeutral => SusceptibilityKind::StubbornNeutral,
            CompareKind::StubbornExtremist => SusceptibilityKind::StubbornExtremist,
        }
    }
}

#[derive(Debug)]
enum CliError {
    Invalid(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn load(cli: &Cli, path: &Path) -> Result<Scenario, CliError> {
    let mut doc = read_document(path)?;
    if let Some(seed) = cli.seed {
        doc.seed = seed;
    }
    if let Some(eps) = cli.epsilon {
        doc.stop.consensus_epsilon = eps;
    }
    if let Some(max) = cli.max_steps {
        doc.stop.max_steps = max;
    }
    Ok(Scenario::from_document(&doc)?)
}

fn describe(run: &ScenarioRun) -> String {
    let s = &run.summary;
    match s.consensus_value {
        Some(v) => format!("consensus {v} at t={}", s.steps),
        None => {
            let spread = run.trajectory.rows().last().map_or(f64::NAN, |r| r.spread);
            format!("stopped ({}) at t={}, spread {spread:e}", s.stop_reason, s.steps)
        }
    }
}

fn write_run(out: &Path, stem: &str, run: &ScenarioRun) -> Result<(), CliError> {
    write_trajectory(&run.trajectory, &out.join(format!("{stem}.csv")))?;
    write_summary(&run.summary, &out.join(format!("{stem}.summary.json")))?;
    Ok(())
}

fn simulate(cli: &Cli, path: &Path) -> Result<(), CliError> {
    let scenario = load(cli, path)?;
    let run = run_scenario(&scenario)?;
    write_run(&cli.out, &scenario.id, &run)?;
    println!("{}: {}", scenario.id, describe(&run));
    Ok(())
}

fn validate(cli: &Cli, path: &Path, beta: f64) -> Result<(), CliError> {
    if path.extension().is_some_and(|e| e == "json") {
        let s = load(cli, path)?;
        let matrices = match s.schedule.kind() {
            ScheduleKind::Static(_) => 1,
            ScheduleKind::Periodic(ms) => ms.len(),
            ScheduleKind::SeededRandom { pool, .. } => pool.len(),
        };
        println!("valid: scenario {} ({} agents, {matrices} matrices)", s.id, s.x0.len());
        return Ok(());
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let w = match WeightMatrix::parse_dense(&text, beta) {
        Ok(w) => w,
        Err(GraphError::Invalid(report)) => {
            return Err(CliError::Invalid(format!("{}: invalid: {report}", path.display())));
        }
        Err(e) => return Err(CliError::Invalid(format!("{}: {e}", path.display()))),
    };
    // Re-run the report for the summary line; it is empty here.
    let report = validate_weight_matrix(&w.to_rows(), beta)?;
    println!("{}: {report} ({} agents, beta {beta})", path.display(), w.n());
    Ok(())
}

fn classify(cli: &Cli, path: &Path, window: Option<(usize, usize)>, horizon: usize) -> Result<(), CliError> {
    let s = load(cli, path)?;
    let connected = match window {
        Some((p, q)) => verify_repeated_joint_connectivity(&s.schedule, p, q, horizon)?,
        None => s.is_connected(),
    };
    println!("{}", classify_limit(&s.x0, &s.kind, connected));
    Ok(())
}

fn connectivity(
    cli: &Cli,
    path: &Path,
    p: Option<usize>,
    q: usize,
    horizon: usize,
    search: bool,
) -> Result<(), CliError> {
    let s = load(cli, path)?;
    if search {
        if q == 0 {
            return Err(GraphError::InvalidWindow { p: 1, q }.into());
        }
        match find_window_length(&s.schedule, q, horizon) {
            Some(p) => println!("repeatedly jointly strongly connected: true (p={p}, q={q}, horizon={horizon})"),
            None => println!(
                "repeatedly jointly strongly connected: false (no p <= {} with q={q})",
                horizon.saturating_sub(q) + 1
            ),
        }
        return Ok(());
    }
    let p = p.expect("clap requires --p without --search-p");
    let ok = verify_repeated_joint_connectivity(&s.schedule, p, q, horizon)?;
    println!("repeatedly jointly strongly connected: {ok} (p={p}, q={q}, horizon={horizon})");
    Ok(())
}

fn compare(cli: &Cli, path: &Path, kind: Option<CompareKind>) -> Result<(), CliError> {
    let base = load(cli, path)?;
    let stubborn = match (kind, &base.kind) {
        (Some(k), _) => k.into(),
        (None, SusceptibilityKind::DeGroot) => SusceptibilityKind::StubbornPositive,
        (None, k) => k.clone(),
    };
    let degroot = base.with_kind(SusceptibilityKind::DeGroot);
    let other = base.with_kind(stubborn);
    let (a, b) = thread::scope(|scope| {
        let a = scope.spawn(|| run_scenario(&degroot));
        let b = scope.spawn(|| run_scenario(&other));
        (
            a.join().expect("degroot run panicked"),
            b.join().expect("comparison run panicked"),
        )
    });
    let (a, b) = (a?, b?);
    write_run(&cli.out, &format!("{}.degroot", base.id), &a)?;
    write_run(&cli.out, &format!("{}.{}", base.id, other.kind.name()), &b)?;
    println!(
        "{}: degroot {}; {} {}",
        base.id,
        describe(&a),
        other.kind.name(),
        describe(&b)
    );
    if let (Some(x), Some(y)) = (a.summary.consensus_value, b.summary.consensus_value) {
        println!("difference {:e}", (y - x).abs());
    }
    Ok(())
}

fn oracle(cli: &Cli, path: &Path) -> Result<(), CliError> {
    let s = load(cli, path)?;
    let w = match s.schedule.kind() {
        ScheduleKind::Static(w) => w,
        _ => return Err(CliError::Invalid("the spectral value needs a static schedule".into())),
    };
    let c = left_stationary_vector(w).map_err(|e| CliError::Invalid(e.to_string()))?;
    let value: f64 = c.weights.iter().zip(s.x0.as_slice()).map(|(a, b)| a * b).sum();
    println!(
        "{}: degroot consensus value {value} (residual {:e}, {} iterations)",
        s.id, c.residual, c.iterations
    );
    println!("left eigenvector {:?}", c.weights);
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate { scenario } => simulate(cli, scenario),
        Command::Validate { input, beta } => validate(cli, input, *beta),
        Command::Classify {
            scenario,
            p,
            q,
            horizon,
        } => classify(cli, scenario, p.zip(*q), *horizon),
        Command::Connectivity {
            scenario,
            p,
            q,
            horizon,
            search_p,
        } => connectivity(cli, scenario, *p, *q, *horizon, *search_p),
        Command::Compare { scenario, kind } => compare(cli, scenario, *kind),
        Command::Oracle { scenario } => oracle(cli, scenario),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
