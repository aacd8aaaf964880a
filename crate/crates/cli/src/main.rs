//! `graphpq` command-line front end. Every number printed here comes from
//! the library; this file only loads inputs, dispatches and formats.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use graphpq::graph::{GraphError, WeightedGraph};
use graphpq::problem::config::{load_problem_with, ConfigError};
use graphpq::problem::{audit_conditions, constants, AuditGrid, ProblemError};
use graphpq::report::{self, ReportError};
use graphpq::solver::{self, SolveError, SolveOptions, SolveReport};
use graphpq::{calculus, functional, ProblemSpec, State};

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Parse(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::NotConverged(_) => 2,
            Failure::Parse(_) => 3,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        if e.is_parse_error() {
            Failure::Parse(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Io { .. } | GraphError::Parse { .. } => Failure::Parse(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<functional::FunctionalError> for Failure {
    fn from(e: functional::FunctionalError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::NotConverged { .. } | SolveError::PathCollapse { .. } | SolveError::EndpointNotFound { .. } => {
                Failure::NotConverged(e.to_string())
            }
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Functional(_) => Failure::Validation(e.to_string()),
            _ => Failure::Parse(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Parse(format!("{}: {e}", path.display()))
}

#[derive(Parser)]
#[command(name = "graphpq", version, about = "Coupled (p,q)-Laplacian systems on weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the graph and problem and run the calculus identity suite on it.
    Check(CheckArgs),
    /// Print the closed-form constants of the problem.
    Params(ParamsArgs),
    /// Sample the hypotheses on a grid and report violations.
    Audit(AuditArgs),
    /// Search for a solution and write its report.
    Solve(SolveArgs),
    /// Recompute the residual of a stored report.
    Verify(VerifyArgs),
    /// Compare the analytic derivative with finite differences.
    GradCheck(GradCheckArgs),
}

#[derive(Args)]
struct Inputs {
    /// Graph file; replaces the graph named in the problem config.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Problem config (JSON).
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Overrides both λ1 and λ2.
    #[arg(long)]
    lambda: Option<f64>,
}

impl Inputs {
    fn spec(&self) -> Result<ProblemSpec, Failure> {
        let path = self.problem.as_deref().ok_or_else(|| Failure::Parse("--problem is required".into()))?;
        let spec = load_problem_with(path, self.graph.as_deref())?;
        match self.lambda {
            Some(l) => Ok(spec.with_lambda(l, l)?),
            None => Ok(spec),
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random function triples per identity.
    #[arg(long, default_value_t = 20)]
    trials: usize,
}

#[derive(Args)]
struct ParamsArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Radius `l0` of (C1); defaults to the config's `hypothesis.l0`.
    #[arg(long)]
    l0: Option<f64>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Global minimization (coercive case).
    Sub,
    /// Mountain pass between the origin and a spike endpoint.
    SuperMp,
    /// Minimization in the small ball.
    SuperBall,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long)]
    l0: Option<f64>,
    /// Report path; the CSV goes next to it with extension `.csv`. Without
    /// it the report is printed to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Residual tolerance `grad_tol`.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Report written by `solve`.
    solution: PathBuf,
    /// Largest residual accepted as a solution.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct GradCheckArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Random states to test.
    #[arg(long, default_value_t = 5)]
    states: usize,
    #[arg(long, default_value_t = 50)]
    directions: usize,
    /// Finite-difference step; chosen from the energy scale when absent.
    #[arg(long)]
    step: Option<f64>,
    /// Test at the state of a stored report instead of random states.
    #[arg(long)]
    at: Option<PathBuf>,
}

/// Shortest round-trip form, switching to exponent notation away from 1.
fn num(x: f64) -> String {
    if x != 0.0 && !(1e-4..1e6).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn check(args: &CheckArgs) -> Result<(), Failure> {
    let graph = match (&args.inputs.problem, &args.inputs.graph) {
        (Some(_), _) => {
            let spec = args.inputs.spec()?;
            println!(
                "problem {}: p = {}, q = {}, h0 = {}, lambda = ({}, {}), F = {}",
                spec.name(),
                spec.p(),
                spec.q(),
                spec.h0(),
                num(spec.lambda1()),
                num(spec.lambda2()),
                spec.nonlinearity().label()
            );
            spec.graph().clone()
        }
        (None, Some(path)) => WeightedGraph::load(path)?,
        (None, None) => return Err(Failure::Parse("--graph or --problem is required".into())),
    };
    println!(
        "graph: {} vertices, {} edges, mu0 = {}, diameter {}",
        graph.len(),
        graph.edges().len(),
        graph.mu0(),
        graph.diameter().map_or("undefined".to_owned(), |d| d.to_string())
    );
    let validation = graph.validate();
    println!("validation: {validation}");
    if !validation.is_valid() {
        return Err(Failure::Validation(format!("invalid graph: {validation}")));
    }
    let mut failed = Vec::new();
    for r in calculus::identity_suite(&graph, args.trials, args.seed) {
        let status = if r.holds { "ok" } else { "FAILED" };
        println!("{:<20} max error {:.3e} (tolerance {:.0e}) {status}", r.name, r.max_error, r.tolerance);
        if !r.holds {
            failed.push(r.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("identities failed: {}", failed.join(", "))))
    }
}

fn params(args: &ParamsArgs) -> Result<(), Failure> {
    let spec = args.inputs.spec()?;
    let g = spec.graph();
    println!("problem {} on {} vertices: p = {}, q = {}", spec.name(), spec.n(), spec.p(), spec.q());
    println!("h0 = {}", num(spec.h0()));
    println!("mu0 = {}", num(spec.mu0()));
    println!("lambda1 = {}", num(spec.lambda1()));
    println!("lambda2 = {}", num(spec.lambda2()));
    let (e1, e2) = constants::perturbation_norms(&spec);
    println!("|e1|_(p') = {}", num(e1));
    println!("|e2|_(q') = {}", num(e2));
    match args.l0.or(spec.hypothesis().l0) {
        Some(l0) => {
            let bound = constants::lambda0_params(&spec, l0)?;
            println!("l0 = {}", num(l0));
            println!("Lambda0 = {}", num(bound.big_lambda0));
            println!("lambda0 = {}", num(bound.lambda0));
            match spec.common_lambda() {
                Some(lambda) => match constants::rho_alpha_from(&bound, lambda) {
                    Ok(levels) => {
                        println!("rho = {}", num(levels.rho));
                        println!("alpha = {}", num(levels.alpha));
                    }
                    Err(e) => println!("rho, alpha: {e}"),
                },
                None => println!("rho, alpha: lambda1 != lambda2"),
            }
        }
        None => println!("Lambda0, lambda0, rho, alpha: no l0 (pass --l0 or set hypothesis.l0)"),
    }
    let spikes = [("D1", "D2", spec.spike_vertex()), ("D3", "D4", spec.ball_vertex())];
    for (first, second, x) in spikes {
        match constants::spike_constants(&spec, x) {
            Ok(c) => {
                println!("{first} = {} at {} (integral {})", num(c.d1), g.id(x), num(c.exact1));
                println!("{second} = {} at {} (integral {})", num(c.d2), g.id(x), num(c.exact2));
                if first == "D1" {
                    println!("M_threshold = {}", num(c.m_threshold));
                }
            }
            Err(e) => println!("{first}, {second}: {e}"),
        }
    }
    if let Some(m) = spec.hypothesis().m {
        println!("M = {}", num(m));
    }
    Ok(())
}

fn audit(args: &AuditArgs) -> Result<(), Failure> {
    let spec = args.inputs.spec()?;
    let grid = AuditGrid { seed: args.seed, ..AuditGrid::default() };
    let report = audit_conditions(&spec, &grid);
    for entry in &report.entries {
        println!("{:<6} {}", entry.condition, entry.verdict);
        for (name, value) in &entry.quantities {
            println!("       {name} = {}", num(*value));
        }
    }
    println!("sampled audit: violations are definite, passes are evidence on the grid only");
    let violations: Vec<&str> = report.violations().iter().map(|e| e.condition.as_str()).collect();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("violated: {}", violations.join(", "))))
    }
}

fn run_solver(spec: &ProblemSpec, args: &SolveArgs, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    match args.mode {
        ModeArg::Sub => solver::minimize_global(spec, opts),
        ModeArg::SuperMp => {
            let (_, levels) = solver::superlinear_levels(spec, args.l0)?;
            let endpoint = solver::find_endpoint(spec, spec.spike_vertex(), levels.rho)?;
            solver::mountain_pass(spec, &endpoint.state, Some(levels), opts)
        }
        ModeArg::SuperBall => {
            let (_, levels) = solver::superlinear_levels(spec, args.l0)?;
            solver::minimize_in_ball(spec, levels.rho, opts)
        }
    }
}

fn write_outputs(spec: &ProblemSpec, report: &SolveReport, out: Option<&Path>) -> Result<(), Failure> {
    let json = report::to_json_string(spec.graph(), report);
    let Some(path) = out else {
        print!("{json}");
        return Ok(());
    };
    std::fs::write(path, json).map_err(|e| io_failure(path, e))?;
    let csv_path = path.with_extension("csv");
    let file = File::create(&csv_path).map_err(|e| io_failure(&csv_path, e))?;
    let mut writer = BufWriter::new(file);
    report::write_solution_csv(spec, &report.state, &mut writer)?;
    writer.flush().map_err(|e| io_failure(&csv_path, e))?;
    eprintln!("wrote {} and {}", path.display(), csv_path.display());
    Ok(())
}

fn summarize(report: &SolveReport) {
    eprintln!(
        "{}: energy {}, residual {:.3e}, {} iterations, {}",
        report.mode.as_str(),
        num(report.energy),
        report.residual_sup,
        report.iterations,
        report.classification.as_str()
    );
    for b in &report.bound_checks {
        let verdict = match b.holds {
            Some(true) => "holds",
            Some(false) => "fails",
            None => "not applicable",
        };
        match (b.lhs, b.rhs) {
            (Some(l), Some(r)) => eprintln!("  {}: {} vs {}, {verdict}", b.name, num(l), num(r)),
            _ => eprintln!("  {}: {verdict}", b.name),
        }
    }
}

fn solve(args: &SolveArgs) -> Result<(), Failure> {
    let spec = args.inputs.spec()?;
    let defaults = SolveOptions::default();
    let opts = SolveOptions {
        seed: args.seed,
        grad_tol: args.tol.unwrap_or(defaults.grad_tol),
        max_iters: args.max_iters.unwrap_or(defaults.max_iters),
        restarts: args.restarts.unwrap_or(defaults.restarts),
        ..defaults
    };
    match run_solver(&spec, args, &opts) {
        Ok(report) => {
            summarize(&report);
            write_outputs(&spec, &report, args.out.as_deref())
        }
        Err(e) => {
            if let Some(report) = e.report() {
                summarize(report);
                write_outputs(&spec, report, args.out.as_deref())?;
            }
            Err(e.into())
        }
    }
}

fn read_report(spec: &ProblemSpec, path: &Path) -> Result<SolveReport, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Ok(report::from_json_str(spec.graph(), &text)?)
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let spec = args.inputs.spec()?;
    let stored = read_report(&spec, &args.solution)?;
    let residual = functional::residual(&spec, &stored.state)?;
    let energy = functional::energy(&spec, &stored.state)?;
    let classification = solver::classify(&spec, &stored.state, SolveOptions::default().triv_tol).classification;
    println!("residual_sup: stored {:e}, recomputed {:e}", stored.residual_sup, residual.sup);
    println!("energy: stored {}, recomputed {}", num(stored.energy), num(energy));
    println!("classification: stored {}, recomputed {}", stored.classification.as_str(), classification.as_str());
    let drift = (residual.sup - stored.residual_sup).abs();
    if drift > 1e-12 * stored.residual_sup.abs().max(1.0) {
        return Err(Failure::Validation(format!("stored residual differs from recomputed by {drift:e}")));
    }
    if residual.sup > args.tol {
        return Err(Failure::Validation(format!("residual {:e} exceeds {:e}", residual.sup, args.tol)));
    }
    Ok(())
}

fn grad_check(args: &GradCheckArgs) -> Result<(), Failure> {
    let spec = args.inputs.spec()?;
    let states: Vec<State> = match &args.at {
        Some(path) => vec![read_report(&spec, path)?.state],
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            (0..args.states).map(|_| State::random(spec.n(), &mut rng)).collect()
        }
    };
    let mut worst = 0.0f64;
    for (i, state) in states.iter().enumerate() {
        let check = functional::fd_check(&spec, state, args.directions, args.step, args.seed.wrapping_add(i as u64))?;
        println!(
            "state {i}: max relative error {:.3e} over {} directions (step {:e})",
            check.max_rel_err, check.directions, check.step
        );
        worst = worst.max(check.max_rel_err);
    }
    if worst <= args.tol {
        Ok(())
    } else {
        Err(Failure::Validation(format!("max relative error {worst:e} exceeds {:e}", args.tol)))
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("GRAPHPQ_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| Failure::Parse(format!("GRAPHPQ_THREADS = `{value}` is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Validation(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    configure_threads()?;
    match &cli.command {
        Command::Check(args) => check(args),
        Command::Params(args) => params(args),
        Command::Audit(args) => audit(args),
        Command::Solve(args) => solve(args),
        Command::Verify(args) => verify(args),
        Command::GradCheck(args) => grad_check(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(3);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
