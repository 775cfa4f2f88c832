//! Command-line front end. Every subcommand writes one JSON report and
//! signals the outcome through its exit code: 0 optimal, 2 infeasible,
//! 3 parse or validation error, 4 numeric failure or iteration limit.

pub mod expr;
pub mod problem;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::apps::graphs::{adjacency, node_count, parse_edge_list};
use crate::apps::{
    build_buffer_network, build_sis_problem, sis_investments, BufferNetwork, SisNetwork,
};
use crate::error::{Error, Result};
use crate::gpsolve::SolveOptions;
use crate::synth::{
    certify, minimize_gamma, synthesize, CertifyOptions, CostSpec, Level, Outcome, Requirement,
    ThetaSet, UncertaintyStructure,
};
use crate::sysmodel::{
    linalg::sigma_max, norm_report, robust_abscissa_estimate, BlockStructure, ParamSystem,
};
pub use problem::{parse_problem, read_problem, Problem};
use report::{
    status_name, Diagnostics, NamedValue, Report, RequirementInfo, Slack, SolveRecord, SweepRecord,
};

#[derive(Debug, Parser)]
#[command(
    name = "posgp",
    version,
    about = "Cost-optimal synthesis of positive linear systems by geometric programming"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Relaxation of strict inequalities, `f < 1` becomes `f ≤ 1 − margin`.
    #[arg(long)]
    pub strict_margin: Option<f64>,
    /// Truncation order of the exponential series in delay constraints.
    #[arg(long)]
    pub series_order: Option<usize>,
    /// Seed for the sampling oracles.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random candidates tried by the robust sampling oracle.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Problem file (TOML).
    pub file: PathBuf,
    /// Norm bound or decay rate; defaults to `requirement.gamma` in the file.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Uncertainty bound for `solve-robust`.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Schatten order (even).
    #[arg(long)]
    pub p: Option<u32>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    SolveH2,
    SolveHinf,
    SolveMixed,
    SolveHankel,
    SolveSchatten,
    SolveRobust,
    SolveRobustEpsmax,
    SolveDelay,
}

impl SolverKind {
    fn name(self) -> &'static str {
        match self {
            SolverKind::SolveH2 => "solve-h2",
            SolverKind::SolveHinf => "solve-hinf",
            SolverKind::SolveMixed => "solve-mixed",
            SolverKind::SolveHankel => "solve-hankel",
            SolverKind::SolveSchatten => "solve-schatten",
            SolverKind::SolveRobust => "solve-robust",
            SolverKind::SolveRobustEpsmax => "solve-robust-epsmax",
            SolverKind::SolveDelay => "solve-delay",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize cost subject to an H² norm bound.
    SolveH2(SolveArgs),
    /// Minimize cost subject to an H∞ norm bound.
    SolveHinf(SolveArgs),
    /// Minimize cost subject to a mixed H²/H∞ trade-off `α(γ₂, γ∞) < γ`.
    SolveMixed(SolveArgs),
    /// Minimize cost subject to a Hankel norm bound.
    SolveHankel(SolveArgs),
    /// Minimize cost subject to a Schatten p-norm bound.
    SolveSchatten(SolveArgs),
    /// Minimize cost subject to robust decay rate `γ` under structured uncertainty.
    SolveRobust(SolveArgs),
    /// Maximize the tolerable uncertainty bound for decay rate `γ`.
    SolveRobustEpsmax(SolveArgs),
    /// Minimize cost subject to a delay trade-off `β(ρ, γ₁, γ∞) < γ`.
    SolveDelay(SolveArgs),
    /// Minimize the level of a requirement, optionally under a cost budget.
    MinGamma {
        solver: SolverKind,
        file: PathBuf,
        /// Upper bound on the cost `L(θ)`.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        p: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the norm oracles at a given parameter point, without solving.
    Oracle {
        file: PathBuf,
        /// Parameter values: whitespace-separated numbers, or `name = value` lines.
        #[arg(long)]
        theta_file: PathBuf,
        #[arg(long)]
        p: Option<u32>,
        #[arg(long)]
        eps: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Solve over a grid of levels `a:step:b`; grid points run concurrently.
    Sweep {
        solver: SolverKind,
        file: PathBuf,
        #[arg(long)]
        gamma_grid: String,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        p: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Buffer network from an edge list; H∞ design at `--gamma`, or the smallest achievable level.
    BufferNet {
        edges: PathBuf,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 5.0)]
        phi_max: f64,
        #[arg(long, default_value_t = 5.0)]
        psi_max: f64,
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// SIS epidemic on an uncertain network given as an edge list.
    Sis {
        edges: PathBuf,
        #[arg(long)]
        nodes: Option<usize>,
        /// Absolute bound on the adjacency perturbation.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Interpret `--eps` as a fraction of the nominal spectral norm.
        #[arg(long)]
        eps_relative: bool,
        /// Required decay rate.
        #[arg(long, default_value_t = 0.01)]
        gamma: f64,
        /// Use the recovery-rate reparametrization.
        #[arg(long)]
        reparametrize: bool,
        #[arg(long, default_value_t = 0.1)]
        beta_min: f64,
        #[arg(long, default_value_t = 0.2)]
        beta_max: f64,
        #[arg(long, default_value_t = 1.0)]
        delta_min: f64,
        #[arg(long, default_value_t = 2.0)]
        delta_max: f64,
        /// Exponent of the infection-rate cost.
        #[arg(long, default_value_t = 0.1)]
        cost_p: f64,
        /// Exponent of the recovery-rate cost.
        #[arg(long, default_value_t = 1.0)]
        cost_q: f64,
        #[command(flatten)]
        common: Common,
    },
}

/// Parses arguments, runs the command, writes the report to stdout (or
/// `--out`) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (report, out) = execute(&cli.command);
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    let written = match out {
        Some(path) => std::fs::write(path, text).map_err(|e| e.to_string()),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    for e in &report.result.diagnostics.errors {
        eprintln!("posgp: {e}");
    }
    if let Err(e) = written {
        eprintln!("posgp: cannot write report: {e}");
        return 3;
    }
    report.exit_code()
}

/// Runs a parsed command. Errors become an `InvalidInput` (or numeric
/// failure) report rather than a panic.
pub fn execute(cmd: &Command) -> (Report, Option<PathBuf>) {
    let (name, common) = command_meta(cmd);
    let out = common.out.clone();
    let report = dispatch(cmd).unwrap_or_else(|e| {
        let status = if is_numeric(&e) {
            "NumericFailure"
        } else {
            "InvalidInput"
        };
        let mut rec = SolveRecord::empty(status);
        rec.diagnostics.errors.push(e.to_string());
        Report::new(name, common.seed, rec)
    });
    (report, out)
}

fn command_meta(cmd: &Command) -> (&'static str, &Common) {
    match cmd {
        Command::SolveH2(a) => ("solve-h2", &a.common),
        Command::SolveHinf(a) => ("solve-hinf", &a.common),
        Command::SolveMixed(a) => ("solve-mixed", &a.common),
        Command::SolveHankel(a) => ("solve-hankel", &a.common),
        Command::SolveSchatten(a) => ("solve-schatten", &a.common),
        Command::SolveRobust(a) => ("solve-robust", &a.common),
        Command::SolveRobustEpsmax(a) => ("solve-robust-epsmax", &a.common),
        Command::SolveDelay(a) => ("solve-delay", &a.common),
        Command::MinGamma { common, .. } => ("min-gamma", common),
        Command::Oracle { common, .. } => ("oracle", common),
        Command::Sweep { common, .. } => ("sweep", common),
        Command::BufferNet { common, .. } => ("buffer-net", common),
        Command::Sis { common, .. } => ("sis", common),
    }
}

fn is_numeric(e: &Error) -> bool {
    matches!(
        e,
        Error::NotHurwitz(_)
            | Error::EigenFailure
            | Error::Singular(_)
            | Error::RouteDisagreement(_)
    )
}

fn options(file: Option<&Problem>, common: &Common) -> Result<SolveOptions> {
    let mut o = SolveOptions::default();
    if let Some(p) = file {
        o = p.solver.apply(o);
    }
    if let Some(m) = common.strict_margin {
        o.strict_margin = m;
    }
    if let Some(k) = common.series_order {
        o.delay_series_order = k;
    }
    let o = o.with_env()?;
    o.validate()?;
    Ok(o)
}

/// Solver-independent request assembled from flags and file defaults.
struct Request {
    kind: SolverKind,
    level: Level,
    eps: Option<f64>,
    p: Option<u32>,
    budget: Option<f64>,
}

impl Request {
    fn info(&self) -> RequirementInfo {
        RequirementInfo {
            kind: self.kind.name().into(),
            gamma: self.level.fixed(),
            minimize_level: self.level == Level::Free,
            eps: self.eps,
            p: self.p,
            budget: self.budget,
        }
    }
}

fn blocks_for(problem: &Problem) -> Result<BlockStructure> {
    match &problem.blocks {
        Some(b) => Ok(b.clone()),
        None if problem.system.nw() == problem.system.ny() => {
            Ok(BlockStructure::scalars(problem.system.nw()))
        }
        None => Err(Error::Invalid(
            "robust problems with n_w ≠ n_y need an [uncertainty] section".into(),
        )),
    }
}

fn requirement(problem: &Problem, rq: &Request) -> Result<Requirement> {
    let missing = |what: &str| Error::Invalid(format!("{} needs {what}", rq.kind.name()));
    let level = rq.level;
    Ok(match rq.kind {
        SolverKind::SolveH2 => Requirement::H2 { gamma2: level },
        SolverKind::SolveHinf => Requirement::Hinf { gammainf: level },
        SolverKind::SolveMixed => Requirement::Mixed {
            alpha: problem
                .alpha
                .clone()
                .ok_or_else(|| missing("`requirement.alpha`"))?,
            gamma: level,
        },
        SolverKind::SolveHankel => Requirement::Hankel { gamma: level },
        SolverKind::SolveSchatten => Requirement::Schatten {
            p: rq.p.unwrap_or(2),
            gamma: level,
        },
        SolverKind::SolveRobust => Requirement::Robust {
            uncertainty: UncertaintyStructure {
                blocks: blocks_for(problem)?,
                eps: rq
                    .eps
                    .ok_or_else(|| missing("`--eps` or `uncertainty.eps`"))?,
            },
            gamma: level,
        },
        SolverKind::SolveRobustEpsmax => Requirement::RobustEpsMax {
            blocks: blocks_for(problem)?,
            gamma: level.fixed().ok_or_else(|| {
                Error::Invalid("solve-robust-epsmax needs a fixed --gamma".into())
            })?,
        },
        SolverKind::SolveDelay => Requirement::Delay {
            beta: problem
                .beta
                .clone()
                .ok_or_else(|| missing("`requirement.beta`"))?,
            gamma: level,
        },
    })
}

/// Solves and evaluates one requirement. Only input errors propagate.
fn solve_record(
    ps: &ParamSystem,
    cost: &CostSpec,
    theta: &ThetaSet,
    req: &Requirement,
    budget: Option<f64>,
    opts: &SolveOptions,
    common: &Common,
) -> Result<SolveRecord> {
    let outcome = if req.level() == Some(Level::Free) {
        minimize_gamma(ps, cost, theta, req, budget, opts)?
    } else {
        synthesize(ps, cost, theta, req, budget, opts)?
    };
    Ok(record_from(ps, cost, req, &outcome, common))
}

fn record_from(
    ps: &ParamSystem,
    cost: &CostSpec,
    req: &Requirement,
    outcome: &Outcome,
    common: &Common,
) -> SolveRecord {
    let r = &outcome.result;
    let gp = &outcome.built.problem;
    let mut rec = SolveRecord::empty(status_name(r.status));
    rec.diagnostics = Diagnostics {
        iterations: Some(r.iterations),
        kkt_residual: Some(r.kkt_residual),
        stationarity: Some(r.stationarity),
        phase1_value: r.phase1_value,
        num_variables: Some(gp.vars.len()),
        num_constraints: Some(gp.num_constraints()),
        ..Diagnostics::default()
    };
    if !outcome.is_optimal() {
        return rec;
    }
    let n = outcome.built.n_theta;
    rec.theta = (0..n)
        .map(|k| NamedValue {
            name: gp.vars.name(k).into(),
            value: r.point[k],
        })
        .collect();
    rec.auxiliary = (n..gp.vars.len())
        .filter(|&k| !gp.vars.name(k).contains('['))
        .map(|k| NamedValue {
            name: gp.vars.name(k).into(),
            value: r.point[k],
        })
        .collect();
    rec.level = outcome.level();
    rec.objective = Some(r.objective_value);
    rec.cost = cost.eval(outcome.theta()).ok();
    rec.slacks = gp
        .constraints
        .iter()
        .map(|c| &c.label)
        .zip(&r.constraint_values)
        .chain(
            gp.exp_constraints
                .iter()
                .map(|c| &c.label)
                .zip(&r.exp_constraint_values),
        )
        .map(|(label, &value)| Slack {
            label: label.clone(),
            value,
            slack: 1.0 - value,
        })
        .collect();

    let orders = match req {
        Requirement::Schatten { p, .. } => vec![*p],
        _ => vec![2],
    };
    let evaluated = ps.instantiate(outcome.theta()).and_then(|s| {
        let oracle = norm_report(&s, &orders)?;
        let robust = match req {
            Requirement::Robust { uncertainty, .. } => Some(robust_abscissa_estimate(
                &s,
                &uncertainty.blocks,
                uncertainty.eps,
                common.samples,
                common.seed,
            )?),
            Requirement::RobustEpsMax { blocks, .. } => {
                let eps = outcome.value("eps").unwrap_or(0.0);
                Some(robust_abscissa_estimate(
                    &s,
                    blocks,
                    eps,
                    common.samples,
                    common.seed,
                )?)
            }
            _ => None,
        };
        let cert = certify(
            ps,
            outcome,
            &CertifyOptions {
                samples: common.samples,
                seed: common.seed,
            },
        )?;
        Ok((oracle, robust, cert))
    });
    match evaluated {
        Ok((oracle, robust, cert)) => {
            rec.oracle = Some(oracle);
            rec.robust_abscissa = robust;
            if !cert.passed() {
                rec.diagnostics
                    .warnings
                    .push("oracle certificate did not pass".into());
            }
            rec.certificate = Some(cert);
        }
        Err(e) => rec
            .diagnostics
            .errors
            .push(format!("oracle evaluation failed: {e}")),
    }
    rec
}

fn dispatch(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::SolveH2(a) => solve_cmd(SolverKind::SolveH2, a),
        Command::SolveHinf(a) => solve_cmd(SolverKind::SolveHinf, a),
        Command::SolveMixed(a) => solve_cmd(SolverKind::SolveMixed, a),
        Command::SolveHankel(a) => solve_cmd(SolverKind::SolveHankel, a),
        Command::SolveSchatten(a) => solve_cmd(SolverKind::SolveSchatten, a),
        Command::SolveRobust(a) => solve_cmd(SolverKind::SolveRobust, a),
        Command::SolveRobustEpsmax(a) => solve_cmd(SolverKind::SolveRobustEpsmax, a),
        Command::SolveDelay(a) => solve_cmd(SolverKind::SolveDelay, a),
        Command::MinGamma {
            solver,
            file,
            budget,
            eps,
            p,
            common,
        } => {
            let problem = read_problem(file)?;
            let rq = Request {
                kind: *solver,
                level: Level::Free,
                eps: eps.or(problem.eps),
                p: p.or(problem.schatten_p),
                budget: *budget,
            };
            run_problem("min-gamma", &problem, rq, common)
        }
        Command::Oracle {
            file,
            theta_file,
            p,
            eps,
            common,
        } => oracle_cmd(file, theta_file, *p, *eps, common),
        Command::Sweep {
            solver,
            file,
            gamma_grid,
            eps,
            p,
            common,
        } => sweep_cmd(*solver, file, gamma_grid, *eps, *p, common),
        Command::BufferNet {
            edges,
            nodes,
            alpha,
            phi_max,
            psi_max,
            gamma,
            common,
        } => buffer_cmd(edges, *nodes, *alpha, *phi_max, *psi_max, *gamma, common),
        Command::Sis { .. } => sis_cmd(cmd),
    }
}

fn solve_cmd(kind: SolverKind, a: &SolveArgs) -> Result<Report> {
    let problem = read_problem(&a.file)?;
    let gamma = a
        .gamma
        .or(problem.gamma)
        .ok_or_else(|| Error::Invalid(format!("{} needs --gamma", kind.name())))?;
    let rq = Request {
        kind,
        level: Level::Fixed(gamma),
        eps: a.eps.or(problem.eps),
        p: a.p.or(problem.schatten_p),
        budget: None,
    };
    run_problem(kind.name(), &problem, rq, &a.common)
}

fn run_problem(command: &str, problem: &Problem, rq: Request, common: &Common) -> Result<Report> {
    let opts = options(Some(problem), common)?;
    let req = requirement(problem, &rq)?;
    let rec = solve_record(
        &problem.system,
        &problem.cost,
        &problem.theta,
        &req,
        rq.budget,
        &opts,
        common,
    )?;
    let mut report = Report::new(command, common.seed, rec);
    report.requirement = Some(rq.info());
    report.solver_options = Some(opts);
    report.problem = Some(problem.to_toml());
    Ok(report)
}

/// `a:step:b`, inclusive of `b` up to rounding.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Invalid(format!("grid `{spec}` is not of the form a:step:b"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [a, step, b] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(Error::Invalid(format!("grid `{spec}` has too many points")));
    }
    Ok((0..count).map(|k| a + k as f64 * step).collect())
}

fn sweep_cmd(
    kind: SolverKind,
    file: &Path,
    grid: &str,
    eps: Option<f64>,
    p: Option<u32>,
    common: &Common,
) -> Result<Report> {
    let problem = read_problem(file)?;
    let grid = parse_grid(grid)?;
    let opts = options(Some(&problem), common)?;
    let base = Request {
        kind,
        level: Level::Fixed(grid[0]),
        eps: eps.or(problem.eps),
        p: p.or(problem.schatten_p),
        budget: None,
    };
    let reqs: Vec<Requirement> = grid
        .iter()
        .map(|&g| {
            requirement(
                &problem,
                &Request {
                    level: Level::Fixed(g),
                    ..base
                },
            )
        })
        .collect::<Result<_>>()?;

    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(grid.len());
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<SolveRecord>> = vec![None; grid.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        if k >= reqs.len() {
                            return done;
                        }
                        let rec = solve_record(
                            &problem.system,
                            &problem.cost,
                            &problem.theta,
                            &reqs[k],
                            None,
                            &opts,
                            common,
                        )
                        .unwrap_or_else(|e| {
                            let mut r = SolveRecord::empty("InvalidInput");
                            r.diagnostics.errors.push(e.to_string());
                            r
                        });
                        done.push((k, rec));
                    }
                })
            })
            .collect();
        for h in handles {
            for (k, rec) in h.join().expect("sweep worker panicked") {
                slots[k] = Some(rec);
            }
        }
    });
    let records = grid
        .iter()
        .zip(slots)
        .map(|(&gamma, rec)| SweepRecord {
            gamma,
            record: rec.expect("every grid point solved"),
        })
        .collect();
    let mut report = Report::new("sweep", common.seed, SolveRecord::empty("Evaluated"));
    report.requirement = Some(base.info());
    report.solver_options = Some(opts);
    report.records = records;
    report.problem = Some(problem.to_toml());
    Ok(report)
}

/// Whitespace-separated numbers in variable order, or `name = value` lines.
pub fn parse_theta_file(text: &str, problem: &Problem) -> Result<Vec<f64>> {
    let vars = &problem.system.vars;
    if text.contains('=') {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Parse {
            line: 1,
            col: 1,
            msg: e.message().into(),
        })?;
        let mut point = vec![f64::NAN; vars.len()];
        for (name, v) in &table {
            let slot = vars.require(name)?;
            point[slot] = v
                .as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .ok_or_else(|| Error::Invalid(format!("value of `{name}` is not a number")))?;
        }
        if let Some(k) = point.iter().position(|v| v.is_nan()) {
            return Err(Error::Invalid(format!("no value for `{}`", vars.name(k))));
        }
        return Ok(point);
    }
    let point: Vec<f64> = text
        .split_whitespace()
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Invalid(format!("`{s}` is not a number")))
        })
        .collect::<Result<_>>()?;
    if point.len() != vars.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for {} variables",
            point.len(),
            vars.len()
        )));
    }
    Ok(point)
}

fn oracle_cmd(
    file: &Path,
    theta_file: &Path,
    p: Option<u32>,
    eps: Option<f64>,
    common: &Common,
) -> Result<Report> {
    let problem = read_problem(file)?;
    let text = std::fs::read_to_string(theta_file)
        .map_err(|e| Error::Io(format!("{}: {e}", theta_file.display())))?;
    let point = parse_theta_file(&text, &problem)?;
    for (k, &v) in point.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositive {
                name: problem.system.vars.name(k).into(),
                value: v,
            });
        }
    }
    let s = problem.system.instantiate(&point)?;
    let mut rec = SolveRecord::empty("Evaluated");
    rec.theta = point
        .iter()
        .enumerate()
        .map(|(k, &value)| NamedValue {
            name: problem.system.vars.name(k).into(),
            value,
        })
        .collect();
    rec.cost = problem.cost.eval(&point).ok();
    let orders = vec![p.or(problem.schatten_p).unwrap_or(2)];
    match norm_report(&s, &orders) {
        Ok(r) => rec.oracle = Some(r),
        Err(e) => rec
            .diagnostics
            .errors
            .push(format!("oracle evaluation failed: {e}")),
    }
    if let (Some(eps), Ok(blocks)) = (eps.or(problem.eps), blocks_for(&problem)) {
        match robust_abscissa_estimate(&s, &blocks, eps, common.samples, common.seed) {
            Ok(v) => rec.robust_abscissa = Some(v),
            Err(e) => rec
                .diagnostics
                .errors
                .push(format!("robust oracle failed: {e}")),
        }
    }
    let mut report = Report::new("oracle", common.seed, rec);
    report.problem = Some(problem.to_toml());
    Ok(report)
}

fn read_edges(
    path: &Path,
    nodes: Option<usize>,
) -> Result<(usize, Vec<crate::apps::graphs::Edge>)> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let edges = parse_edge_list(&text)?;
    let n = nodes.unwrap_or_else(|| node_count(&edges));
    Ok((n, edges))
}

fn buffer_cmd(
    edges: &Path,
    nodes: Option<usize>,
    alpha: f64,
    phi_max: f64,
    psi_max: f64,
    gamma: Option<f64>,
    common: &Common,
) -> Result<Report> {
    let (n, edges) = read_edges(edges, nodes)?;
    let bn = BufferNetwork::new(n, &edges, alpha, phi_max, psi_max)?;
    let bp = build_buffer_network(&bn)?;
    let opts = options(None, common)?;
    let level = gamma.map_or(Level::Free, Level::Fixed);
    let req = Requirement::Hinf { gammainf: level };
    let mut rec = solve_record(&bp.system, &bp.cost, &bp.theta, &req, None, &opts, common)?;
    rec.diagnostics.warnings.extend(bp.warnings);
    let mut report = Report::new("buffer-net", common.seed, rec);
    report.requirement = Some(RequirementInfo {
        kind: "solve-hinf".into(),
        gamma,
        minimize_level: gamma.is_none(),
        eps: None,
        p: None,
        budget: None,
    });
    report.solver_options = Some(opts);
    Ok(report)
}

fn sis_cmd(cmd: &Command) -> Result<Report> {
    let Command::Sis {
        edges,
        nodes,
        eps,
        eps_relative,
        gamma,
        reparametrize,
        beta_min,
        beta_max,
        delta_min,
        delta_max,
        cost_p,
        cost_q,
        common,
    } = cmd
    else {
        unreachable!("sis_cmd called with another command")
    };
    let (n, edges) = read_edges(edges, *nodes)?;
    let a = adjacency(n, &edges)?;
    let norm = sigma_max(&a);
    let eps = if *eps_relative { eps * norm } else { *eps };
    let sn = SisNetwork {
        adjacency: a,
        eps,
        beta_min: *beta_min,
        beta_max: *beta_max,
        delta_min: *delta_min,
        delta_max: *delta_max,
        p: *cost_p,
        q: *cost_q,
        gamma: *gamma,
    };
    let sp = build_sis_problem(&sn, *reparametrize)?;
    let opts = options(None, common)?;
    let req = Requirement::Robust {
        uncertainty: sp.uncertainty.clone(),
        gamma: Level::Fixed(sn.gamma),
    };
    let outcome = synthesize(&sp.system, &sp.cost, &sp.theta, &req, None, &opts)?;
    let rec = record_from(&sp.system, &sp.cost, &req, &outcome, common);
    let mut report = Report::new("sis", common.seed, rec);
    if outcome.is_optimal() {
        report.investments = sis_investments(&sn, &sp, outcome.theta());
    }
    report.spectral_norm = Some(norm);
    report.requirement = Some(RequirementInfo {
        kind: "solve-robust".into(),
        gamma: Some(sn.gamma),
        minimize_level: false,
        eps: Some(eps),
        p: None,
        budget: None,
    });
    report.solver_options = Some(opts);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = parse_grid("0.4:0.1:1.0").unwrap();
        assert_eq!(g.len(), 7);
        assert!((g[6] - 1.0).abs() < 1e-12);
        assert_eq!(parse_grid("1:1:1").unwrap(), vec![1.0]);
        assert!(parse_grid("1:0:2").is_err());
        assert!(parse_grid("2:1:1").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn usage_errors_exit_3() {
        assert_eq!(run(["posgp", "solve-hinf"]), 3);
        assert_eq!(run(["posgp", "frobnicate"]), 3);
    }
}
