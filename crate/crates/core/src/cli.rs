//! The `erw` command line: argument parsing, dispatch and output.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::branching::TransitionKernel;
use crate::environment::CookieEnvironment;
use crate::error::ErwError;
use crate::output::{Field, Record, Table};
use crate::speed_bounds::{abc_coefficients, maximize_gap, speed_interval, RegionShape, SearchRegion};
use crate::stationary::{check_abc, solve_stationary_with, SolveOptions, TruncationScheme};
use crate::walker::{self, replicate_seed, HittingOutcome};

#[derive(Debug, Parser)]
#[command(name = "erw", version, about = "Excited random walks: simulation, stationary solves and speed bounds")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Region {
    Symmetric,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Auto,
    RowRenormalized,
    TailAugmented,
}

#[derive(Debug, Args)]
pub struct EnvArg {
    /// Cookie strengths, comma separated, e.g. 0.9,0.9,0.9.
    #[arg(long = "p", value_name = "P1,P2,...", allow_hyphen_values = true)]
    pub p: CookieEnvironment,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Master seed.
    #[arg(long, env = "ERW_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct StationaryArgs {
    #[arg(long, default_value_t = 200)]
    pub truncation: usize,
    #[arg(long = "tol", default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Scheme::Auto)]
    pub scheme: Scheme,
    /// Power-law terms in the tail model.
    #[arg(long, default_value_t = 3)]
    pub tail_terms: usize,
}

impl StationaryArgs {
    fn options(&self) -> SolveOptions {
        let opts = SolveOptions::new(self.truncation, self.tol);
        match self.scheme {
            Scheme::Auto => opts,
            Scheme::RowRenormalized => opts.with_scheme(TruncationScheme::RowRenormalized),
            Scheme::TailAugmented => opts.with_scheme(TruncationScheme::TailAugmented {
                terms: self.tail_terms,
            }),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drift, transience and speed sign.
    Classify {
        #[command(flatten)]
        env: EnvArg,
    },
    /// Monte Carlo speed from X_n / n.
    Simulate {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        #[arg(long, default_value_t = 1)]
        replicates: u64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Speed from the hitting time of a target site.
    Hitting {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long)]
        target: u64,
        /// Step budget per walk (default: 100 * target).
        #[arg(long)]
        step_cap: Option<u64>,
        #[arg(long, default_value_t = 1)]
        replicates: u64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Transition probabilities of the backward branching process.
    Kernel {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, default_value_t = 10)]
        rows: u64,
        #[arg(long, default_value_t = 10)]
        cols: u64,
    },
    /// Truncated stationary distribution and the implied speed.
    Stationary {
        #[command(flatten)]
        env: EnvArg,
        #[command(flatten)]
        solve: StationaryArgs,
    },
    /// Explicit speed interval for three cookies.
    Bounds {
        #[command(flatten)]
        env: EnvArg,
    },
    /// Largest width of the speed interval over a parameter region.
    Gap {
        #[arg(long, value_enum, default_value_t = Region::Symmetric)]
        region: Region,
        /// Grid spacing; 0.001 for the symmetric region, 0.01 for the general one.
        #[arg(long)]
        grid: Option<f64>,
        #[arg(long, default_value_t = 1e-9)]
        refine_tol: f64,
        #[arg(long, default_value_t = 0.0)]
        lower: f64,
        #[arg(long, default_value_t = 1.0)]
        upper: f64,
    },
    /// Checks Monte Carlo, stationary and closed-form speeds against each other.
    Verify {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 50)]
        replicates: u64,
        #[command(flatten)]
        solve: StationaryArgs,
        #[command(flatten)]
        seed: SeedArg,
        /// Move this fraction of every row's mass from state 0 to state 1.
        #[arg(long, hide = true)]
        corrupt_kernel: Option<f64>,
    },
}

/// Result of a run: the text to emit and whether the run succeeded.
pub struct Emission {
    pub text: String,
    pub ok: bool,
}

#[derive(Debug)]
pub enum CliError {
    Core(ErwError),
    Io(std::io::Error),
}

impl From<ErwError> for CliError {
    fn from(e: ErwError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(ErwError::InvalidArgument(_) | ErwError::InvalidEnvironment(_)) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

fn emit(format: Format, record: Record, table: impl FnOnce() -> Table) -> String {
    match format {
        Format::Json => record.to_json() + "\n",
        Format::Csv => table().to_csv(),
    }
}

fn summary(format: Format, record: Record) -> String {
    match format {
        Format::Json => record.to_json() + "\n",
        Format::Csv => record.to_csv(),
    }
}

fn strengths(env: &CookieEnvironment) -> Field {
    env.strengths().to_vec().into()
}

pub fn run(cli: &Cli) -> Result<Emission, CliError> {
    let fmt = |default: Format| cli.format.unwrap_or(default);
    let text = match &cli.command {
        Command::Classify { env } => {
            let env = &env.p;
            let c = env.classify();
            summary(
                fmt(Format::Json),
                Record::new()
                    .with("p", strengths(env))
                    .with("delta", env.delta())
                    .with("transience", format!("{:?}", c.transience))
                    .with("speed_sign", format!("{:?}", c.speed_sign))
                    .with("trivial_speed_bound", env.trivial_speed_bound()),
            )
        }
        Command::Simulate {
            env,
            steps,
            replicates,
            seed,
        } => simulate(&env.p, *steps, *replicates, seed.seed, fmt(Format::Json))?,
        Command::Hitting {
            env,
            target,
            step_cap,
            replicates,
            seed,
        } => hitting(
            &env.p,
            *target,
            step_cap.unwrap_or(target.saturating_mul(100)),
            *replicates,
            seed.seed,
            fmt(Format::Json),
        )?,
        Command::Kernel { env, rows, cols } => kernel(&env.p, *rows, *cols, fmt(Format::Csv)),
        Command::Stationary { env, solve } => {
            let kernel = TransitionKernel::new(env.p.clone());
            let sol = solve_stationary_with(&kernel, &solve.options())?;
            let abc = check_abc(&env.p, &sol).ok();
            let record = Record::new()
                .with("p", strengths(&env.p))
                .with("truncation", sol.truncation)
                .with("scheme", scheme_name(sol.scheme))
                .with("tail_mass_bound", sol.tail_mass_bound)
                .with("tail_mass", sol.tail_mass)
                .with("mean_estimate", sol.mean_estimate)
                .with("speed_estimate", sol.speed_estimate)
                .with("genabc_residual", sol.genabc_residual)
                .with("abc_residual", abc)
                .with("iterations", sol.iterations);
            emit(fmt(Format::Json), record, || {
                let mut t = Table::new(&["k", "pi_hat"]);
                for (k, p) in sol.pi_hat.iter().enumerate() {
                    t.push(vec![k.into(), (*p).into()]);
                }
                t
            })
        }
        Command::Bounds { env } => {
            let env = &env.p;
            let b = speed_interval(env)?;
            let abc = abc_coefficients(env)?;
            summary(
                fmt(Format::Json),
                Record::new()
                    .with("p", strengths(env))
                    .with("delta", env.delta())
                    .with("a", abc.a)
                    .with("b", abc.b)
                    .with("c", abc.c)
                    .with("f1", b.f1)
                    .with("f2", b.f2)
                    .with("f3", b.f3)
                    .with("pi0_lower", b.pi0_lower)
                    .with("pi0_upper", b.pi0_upper)
                    .with("v_lower", b.v_lower)
                    .with("v_upper", b.v_upper)
                    .with("gap", b.gap()),
            )
        }
        Command::Gap {
            region,
            grid,
            refine_tol,
            lower,
            upper,
        } => {
            let (base, default_grid) = match region {
                Region::Symmetric => (SearchRegion::symmetric(), 0.001),
                Region::General => (SearchRegion::general(), 0.01),
            };
            let grid = grid.unwrap_or(default_grid);
            let r = maximize_gap(base.restricted(*lower, *upper), grid, *refine_tol)?;
            let at = speed_interval(&r.region.environment(&r.argmax))?;
            let record = Record::new()
                .with(
                    "region",
                    match r.region.shape {
                        RegionShape::Symmetric => "symmetric",
                        RegionShape::General => "general",
                    },
                )
                .with("grid", r.grid_resolution)
                .with("refine_tol", r.refine_tol)
                .with("argmax", r.argmax.clone())
                .with("max_gap", r.max_gap)
                .with("v_lower", at.v_lower)
                .with("v_upper", at.v_upper)
                .with("evaluations", r.evaluations);
            emit(fmt(Format::Json), record, || {
                let coords: &[&str] = match r.region.shape {
                    RegionShape::Symmetric => &["p"],
                    RegionShape::General => &["p1", "p2", "p3"],
                };
                let mut cols = coords.to_vec();
                cols.extend(["v_lower", "v_upper", "gap"]);
                let mut t = Table::new(&cols);
                for g in &r.grid {
                    let mut row: Vec<Field> = g.point.iter().map(|&x| x.into()).collect();
                    row.extend([g.v_lower.into(), g.v_upper.into(), g.gap.into()]);
                    t.push(row);
                }
                t
            })
        }
        Command::Verify {
            env,
            steps,
            replicates,
            solve,
            seed,
            corrupt_kernel,
        } => {
            let (text, ok) = verify(
                &env.p,
                *steps,
                *replicates,
                &solve.options(),
                seed.seed,
                *corrupt_kernel,
                fmt(Format::Json),
            )?;
            return Ok(Emission { text, ok });
        }
    };
    Ok(Emission { text, ok: true })
}

fn scheme_name(s: TruncationScheme) -> String {
    match s {
        TruncationScheme::RowRenormalized => "row-renormalized".into(),
        TruncationScheme::TailAugmented { terms } => format!("tail-augmented({terms})"),
    }
}

fn simulate(env: &CookieEnvironment, steps: u64, replicates: u64, seed: u64, format: Format) -> Result<String, CliError> {
    if steps == 0 || replicates == 0 {
        return Err(ErwError::InvalidArgument("--steps and --replicates must be at least 1".into()).into());
    }
    let records = if replicates == 1 {
        let sub = replicate_seed(seed, 0);
        let w = walker::simulate_walk(env, steps, sub);
        vec![walker::ReplicateRecord {
            replicate: 0,
            seed: sub,
            steps,
            final_position: w.final_position,
            speed_estimate: w.final_position as f64 / steps as f64,
        }]
    } else {
        walker::simulate_replicates(env, steps, replicates, seed)?
    };
    let table = || {
        let mut t = Table::new(&["replicate", "seed", "steps", "final_position", "speed_estimate"]);
        for r in &records {
            t.push(vec![
                r.replicate.into(),
                r.seed.into(),
                r.steps.into(),
                r.final_position.into(),
                r.speed_estimate.into(),
            ]);
        }
        t
    };
    let record = if replicates == 1 {
        let r = &records[0];
        Record::new()
            .with("p", strengths(env))
            .with("seed", seed)
            .with("replicate_seed", r.seed)
            .with("steps", steps)
            .with("final_position", r.final_position)
            .with("speed_estimate", r.speed_estimate)
    } else {
        let m = walker::summarize(&records, seed);
        Record::new()
            .with("p", strengths(env))
            .with("seed", seed)
            .with("steps_per_replicate", m.steps_per_replicate)
            .with("replicates", m.replicates)
            .with("mean", m.mean)
            .with("std_error", m.std_error)
    };
    Ok(emit(format, record, table))
}

fn hitting(
    env: &CookieEnvironment,
    target: u64,
    step_cap: u64,
    replicates: u64,
    seed: u64,
    format: Format,
) -> Result<String, CliError> {
    if replicates == 0 {
        return Err(ErwError::InvalidArgument("--replicates must be at least 1".into()).into());
    }
    let outcomes = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let sub = replicate_seed(seed, r);
            walker::hitting_time(env, target, sub, step_cap).map(|o| (r, sub, o))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let hit_time = |o: &HittingOutcome| match *o {
        HittingOutcome::Hit(t) => Some(t),
        HittingOutcome::Timeout => None,
    };
    let speeds: Vec<f64> = outcomes.iter().filter_map(|(_, _, o)| o.speed(target)).collect();
    let n = speeds.len() as f64;
    let mean = (n > 0.0).then(|| speeds.iter().sum::<f64>() / n);
    let std_error = mean.filter(|_| n > 1.0).map(|m| {
        (speeds.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    });
    let record = Record::new()
        .with("p", strengths(env))
        .with("seed", seed)
        .with("target", target)
        .with("step_cap", step_cap)
        .with("replicates", replicates)
        .with("hits", speeds.len())
        .with("timeouts", outcomes.len() - speeds.len())
        .with("hitting_time", if replicates == 1 { hit_time(&outcomes[0].2) } else { None })
        .with("speed_estimate", mean)
        .with("std_error", std_error);
    Ok(emit(format, record, || {
        let mut t = Table::new(&["replicate", "seed", "target", "hitting_time", "speed_estimate"]);
        for (r, sub, o) in &outcomes {
            t.push(vec![
                (*r).into(),
                (*sub).into(),
                target.into(),
                hit_time(o).into(),
                o.speed(target).into(),
            ]);
        }
        t
    }))
}

fn kernel(env: &CookieEnvironment, rows: u64, cols: u64, format: Format) -> String {
    let kernel = TransitionKernel::new(env.clone());
    let data: Vec<(Vec<f64>, f64)> = (0..rows)
        .into_par_iter()
        .map(|i| {
            let row = kernel.row(i, cols as usize);
            let tail = if cols == 0 { 1.0 } else { kernel.row_tail_mass(i, cols - 1) };
            (row, tail)
        })
        .collect();
    let list: Vec<Field> = data
        .iter()
        .enumerate()
        .map(|(i, (row, tail))| {
            Record::new()
                .with("i", i)
                .with("probs", row.clone())
                .with("tail_mass", *tail)
                .into()
        })
        .collect();
    let record = Record::new().with("p", strengths(env)).with("rows", Field::List(list));
    emit(format, record, || {
        let mut t = Table::new(&["i", "j", "prob"]);
        for (i, (row, tail)) in data.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                t.push(vec![i.into(), j.into(), (*p).into()]);
            }
            t.push(vec![i.into(), "TAIL".into(), (*tail).into()]);
        }
        t
    })
}

/// Statistical slack for the Monte Carlo check, in standard errors.
const MC_SIGMAS: f64 = 4.0;
/// Allowed distance of the stationary speed from the closed-form interval.
const STATIONARY_SLACK: f64 = 1e-4;
const RESIDUAL_LIMIT: f64 = 1e-8;

fn check(name: &str, value: f64, lower: f64, upper: f64) -> (Record, bool) {
    let pass = value >= lower && value <= upper;
    (
        Record::new()
            .with("check", name)
            .with("value", value)
            .with("lower", lower)
            .with("upper", upper)
            .with("pass", pass),
        pass,
    )
}

fn verify(
    env: &CookieEnvironment,
    steps: u64,
    replicates: u64,
    opts: &SolveOptions,
    seed: u64,
    corrupt: Option<f64>,
    format: Format,
) -> Result<(String, bool), CliError> {
    let bounds = speed_interval(env)?;
    let kernel = match corrupt {
        Some(defect) => TransitionKernel::corrupted(env.clone(), defect),
        None => TransitionKernel::new(env.clone()),
    };
    let mc = walker::estimate_speed(env, steps, replicates, seed)?;
    let sol = solve_stationary_with(&kernel, opts)?;
    let abc = check_abc(env, &sol)?;

    let checks = [
        check(
            "monte_carlo_in_bounds",
            mc.mean,
            bounds.v_lower - MC_SIGMAS * mc.std_error,
            bounds.v_upper + MC_SIGMAS * mc.std_error,
        ),
        check(
            "stationary_in_bounds",
            sol.speed_estimate,
            bounds.v_lower - STATIONARY_SLACK,
            bounds.v_upper + STATIONARY_SLACK,
        ),
        check("genabc_residual", sol.genabc_residual, 0.0, RESIDUAL_LIMIT),
        check("abc_residual", abc, 0.0, RESIDUAL_LIMIT),
    ];
    let ok = checks.iter().all(|(_, pass)| *pass);
    let record = Record::new()
        .with("p", strengths(env))
        .with("seed", seed)
        .with("delta", env.delta())
        .with("v_lower", bounds.v_lower)
        .with("v_upper", bounds.v_upper)
        .with("monte_carlo_mean", mc.mean)
        .with("monte_carlo_std_error", mc.std_error)
        .with("steps", steps)
        .with("replicates", replicates)
        .with("stationary_speed", sol.speed_estimate)
        .with("truncation", sol.truncation)
        .with("scheme", scheme_name(sol.scheme))
        .with("genabc_residual", sol.genabc_residual)
        .with("abc_residual", abc)
        .with("corrupted_kernel", corrupt.is_some())
        .with(
            "checks",
            Field::List(checks.iter().map(|(r, _)| r.clone().into()).collect()),
        )
        .with("passed", ok);
    let text = emit(format, record, || {
        let mut t = Table::new(&["check", "value", "lower", "upper", "pass"]);
        for (r, _) in &checks {
            t.push(r.0.iter().map(|(_, v)| v.clone()).collect());
        }
        t
    });
    Ok((text, ok))
}

fn write_out(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(CliError::Io),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(CliError::Io)
        }
    }
}

/// Entry point for the binary: exit 0 on success, 1 on domain or
/// verification failures, 2 on usage errors.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = run(&cli).and_then(|em| write_out(&cli, &em.text).map(|_| em.ok));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
