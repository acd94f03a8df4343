//! `dissem`: schedules, exact solvers, fluid plans, simulation and growth fits.
//!
//! Exit status: 0 on success, 1 on domain errors (including an invalid
//! schedule under `schedule verify`), 2 on usage errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use dissem::analysis::{fit_loglinear, growth_csv, growth_report, samples_csv, GrowthSpec};
use dissem::equal::{build_schedule, replica_profile};
use dissem::exact::{default_tau, min_makespan_with, two_by_two_cases, SearchOptions, SolveStatus};
use dissem::fluid::{build_transfer_plan, fluid_general_makespan, fluid_single_server, verify_plan, FluidInstance};
use dissem::markov::{build_chain, expected_makespan, expected_makespan_exact, MAX_EXACT_PEERS};
use dissem::rational::{self, Rational};
use dissem::sim::{simulate, SimConfig, SweepGrid};
use dissem::{verify_schedule, ContinuousSchedule, Execution, Instance, Scenario};

#[derive(Parser)]
#[command(name = "dissem", version, about = "File dissemination scheduling, solving and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or check schedules.
    #[command(subcommand)]
    Schedule(ScheduleCmd),
    /// Exact and closed-form makespans.
    #[command(subcommand)]
    Solve(SolveCmd),
    /// Monte Carlo runs of the randomized strategy.
    Simulate(SimulateArgs),
    /// Exact expected rounds of the single-part randomized strategy.
    Markov(MarkovArgs),
    /// Least-squares fit of rounds on log2 N from a samples CSV.
    Fit(FitArgs),
    /// Growth fits over a grid of N for several part counts.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum ScheduleCmd {
    /// Optimal round schedule for equal capacities.
    Equal {
        /// Number of peers.
        #[arg(long)]
        n: usize,
        /// Number of file parts.
        #[arg(long)]
        m: usize,
        /// Common upload capacity of every node.
        #[arg(long, default_value = "1")]
        capacity: String,
        /// Schedule JSON path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replica-profile CSV path (round,part,count); printed to stdout when
        /// `--out` is given and this is not.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Check a schedule against an instance and print the report.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        /// Also require one download at a time per peer.
        #[arg(long)]
        check_downloads: bool,
    },
}

#[derive(Subcommand)]
enum SolveCmd {
    /// Minimum makespan by grid search and bisection.
    Exact {
        #[arg(long)]
        instance: PathBuf,
        /// Grid step; defaults to one part at the slowest aligned rate.
        #[arg(long)]
        tau: Option<String>,
        /// Abort after this many search nodes.
        #[arg(long)]
        node_limit: Option<u64>,
        /// Result JSON path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two peers sharing one capacity, file in two parts: the four strategies.
    Table3 {
        /// Server capacity.
        #[arg(long, default_value = "1")]
        cs: String,
        /// Peer capacity; required unless `--sweep`.
        #[arg(long)]
        c1: Option<String>,
        /// Print CSV over C1/CS in (0, 3] instead of a single point.
        #[arg(long)]
        sweep: bool,
    },
    /// Fluid-limit makespan and two-hop plan for users holding files.
    Fluid {
        /// Comma-separated file sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        files: Vec<String>,
        /// Comma-separated upload capacities.
        #[arg(long, value_delimiter = ',', required = true)]
        caps: Vec<String>,
        /// Plan JSON path.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Fluid-limit makespan with one server and N identical clients.
    FluidServer {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1")]
        cs: String,
        /// Client capacity; required unless `--sweep`.
        #[arg(long)]
        c1: Option<String>,
        /// Print CSV over C1/CS in (0, 3] instead of a single point.
        #[arg(long)]
        sweep: bool,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// list or nolist.
    #[arg(long)]
    scenario: Scenario,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, env = "DISSEM_SEED", default_value_t = 1)]
    seed: u64,
    /// Per-replication CSV path (scenario,n,m,replication,rounds).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Allow nolist with several parts (no reference behaviour exists).
    #[arg(long)]
    nolist_multipart: bool,
}

#[derive(Args)]
struct MarkovArgs {
    #[arg(long)]
    scenario: Scenario,
    #[arg(long)]
    n: usize,
    /// Also report the exact rational (N <= 64).
    #[arg(long)]
    exact_rational: bool,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with columns `n` and `rounds`; extra columns are ignored.
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, default_value = "list")]
    scenario: Scenario,
    /// Part counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    m: Vec<usize>,
    /// Largest N; the grid is 2, 4, ... up to this power of two.
    #[arg(long, default_value_t = 1 << 15)]
    n_max: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, env = "DISSEM_SEED", default_value_t = 1)]
    seed: u64,
    /// Growth CSV path; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Per-replication samples CSV path.
    #[arg(long)]
    samples: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Schedule(cmd) => schedule(cmd),
        Command::Solve(cmd) => solve(cmd),
        Command::Simulate(args) => run_simulate(args),
        Command::Markov(args) => run_markov(args),
        Command::Fit(args) => run_fit(args),
        Command::Report(args) => run_report(args),
    }
}

fn parse_q(text: &str) -> Result<Rational> {
    Ok(rational::parse(text.trim())?)
}

/// Writes to `path`, or stdout when `None`; always ends with a newline.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    let body = if text.ends_with('\n') { text.to_string() } else { format!("{text}\n") };
    match path {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON value serializes")
}

fn schedule(cmd: ScheduleCmd) -> Result<()> {
    match cmd {
        ScheduleCmd::Equal { n, m, capacity, out, profile } => {
            let cap = parse_q(&capacity)?;
            let inst = Instance::equal(n, m, cap.clone())?;
            let rounds = build_schedule(n, m)?;
            let sched = rounds.to_continuous(&cap);
            let report = verify_schedule(&inst, &sched, true);
            if !report.valid {
                bail!("constructed schedule failed verification: {:?}", report.violations.first());
            }
            let csv = replica_profile(&rounds, n, m)?.to_csv();
            emit(out.as_deref(), &sched.to_json())?;
            match (profile, out.is_some()) {
                (Some(p), _) => emit(Some(&p), &csv),
                (None, true) => emit(None, &csv),
                (None, false) => Ok(()),
            }
        }
        ScheduleCmd::Verify { instance, schedule, check_downloads } => {
            let inst = Instance::from_json(&read(&instance)?)?;
            let sched = ContinuousSchedule::from_json(&read(&schedule)?)?;
            let report = verify_schedule(&inst, &sched, check_downloads);
            emit(None, &serde_json::to_string_pretty(&report)?)?;
            if !report.valid {
                bail!("schedule is invalid ({} violations)", report.violations.len());
            }
            Ok(())
        }
    }
}

/// `C1/CS` from 0.05 to 3 in steps of 0.05, plus the exact crossovers.
fn ratio_grid() -> Vec<Rational> {
    let mut grid: Vec<Rational> = (1..=60).map(|k| rational::ratio(k, 20)).collect();
    grid.push(rational::ratio(1, 3));
    grid.sort();
    grid.dedup();
    grid
}

fn solve(cmd: SolveCmd) -> Result<()> {
    match cmd {
        SolveCmd::Exact { instance, tau, node_limit, out } => {
            let inst = Instance::from_json(&read(&instance)?)?;
            let tau = match tau {
                Some(t) => parse_q(&t)?,
                None => default_tau(&inst),
            };
            let result = min_makespan_with(&inst, &tau, SearchOptions { node_limit })?;
            if let SolveStatus::Approximate { gap } = &result.status {
                eprintln!("note: tau does not divide every job; optimum is within {} of the result", rational::format(gap));
            }
            emit(out.as_deref(), &pretty(&result.to_json()))
        }
        SolveCmd::Table3 { cs, c1, sweep } => {
            let cs = parse_q(&cs)?;
            if sweep {
                let mut out = String::from("c1_over_cs,a,b,c,d,min,case\n");
                for r in ratio_grid() {
                    let t = two_by_two_cases(&cs, &(&r * &cs))?;
                    let f = |q: &Rational| format!("{:.6}", rational::to_f64(q));
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        f(&r),
                        f(&t.a),
                        f(&t.b),
                        f(&t.c),
                        f(&t.d),
                        f(&t.makespan),
                        t.case
                    ));
                }
                return emit(None, &out);
            }
            let Some(c1) = c1 else { bail!("--c1 is required without --sweep") };
            let t = two_by_two_cases(&cs, &parse_q(&c1)?)?;
            let v = json!({
                "a": rational::format(&t.a),
                "b": rational::format(&t.b),
                "c": rational::format(&t.c),
                "d": rational::format(&t.d),
                "makespan": rational::format(&t.makespan),
                "case": t.case.to_string(),
            });
            emit(None, &pretty(&v))
        }
        SolveCmd::Fluid { files, caps, plan } => {
            let files = files.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?;
            let caps = caps.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?;
            let fi = FluidInstance::new(files, caps)?;
            let makespan = fluid_general_makespan(&fi);
            let p = build_transfer_plan(&fi)?;
            let report = verify_plan(&fi, &p);
            if !report.valid {
                bail!("plan failed verification: {:?}", report.violations);
            }
            if let Some(path) = plan {
                emit(Some(&path), &p.to_json())?;
            }
            let v = json!({
                "makespan": rational::format(&makespan),
                "makespan_decimal": rational::to_f64(&makespan),
                "volume_bound": rational::format(&fi.volume_time()),
                "completion_times": report.completion_times.iter().map(rational::format).collect::<Vec<_>>(),
            });
            emit(None, &pretty(&v))
        }
        SolveCmd::FluidServer { n, cs, c1, sweep } => {
            let cs = parse_q(&cs)?;
            if sweep {
                let mut out = String::from("c1_over_cs,makespan,alpha\n");
                for r in ratio_grid() {
                    let (t, a) = fluid_single_server(n, &cs, &(&r * &cs))?;
                    out.push_str(&format!(
                        "{:.6},{:.6},{:.6}\n",
                        rational::to_f64(&r),
                        rational::to_f64(&t),
                        rational::to_f64(&a)
                    ));
                }
                return emit(None, &out);
            }
            let Some(c1) = c1 else { bail!("--c1 is required without --sweep") };
            let (t, a) = fluid_single_server(n, &cs, &parse_q(&c1)?)?;
            let v = json!({"makespan": rational::format(&t), "alpha": rational::format(&a)});
            emit(None, &pretty(&v))
        }
    }
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let mut config = SimConfig::new(args.n, args.m, args.scenario, args.seed, args.reps);
    config.nolist_multipart = args.nolist_multipart;
    let stats = simulate(&config)?;
    if let Some(path) = &args.csv {
        let mut out = String::from("scenario,n,m,replication,rounds\n");
        for (i, s) in stats.samples.iter().enumerate() {
            out.push_str(&format!("{},{},{},{},{}\n", args.scenario, args.n, args.m, i, s));
        }
        emit(Some(path), &out)?;
    }
    let v = json!({
        "scenario": args.scenario.name(),
        "n": args.n,
        "m": args.m,
        "replications": args.reps,
        "seed": args.seed,
        "mean_rounds": stats.mean,
        "sd": stats.sd,
        "se": stats.se,
        "ci95": [stats.ci95.0, stats.ci95.1],
        "min_rounds": stats.min(),
        "mean_time": stats.mean / args.m as f64,
    });
    emit(None, &pretty(&v))
}

fn run_markov(args: MarkovArgs) -> Result<()> {
    let chain = build_chain(args.n, args.scenario)?;
    let value = expected_makespan(&chain)?;
    let mut v = json!({
        "n": args.n,
        "scenario": args.scenario.name(),
        "expected_rounds": format!("{value:.3}"),
        "expected_rounds_full": value,
    });
    if args.exact_rational {
        if args.n > MAX_EXACT_PEERS {
            bail!("--exact-rational is limited to N <= {MAX_EXACT_PEERS}");
        }
        v["exact"] = json!(rational::format(&expected_makespan_exact(&chain)?));
    }
    emit(None, &pretty(&v))
}

fn run_fit(args: FitArgs) -> Result<()> {
    let mut reader = csv::Reader::from_path(&args.csv).with_context(|| format!("reading {}", args.csv.display()))?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(n_col), Some(y_col)) = (column("n"), column("rounds")) else {
        bail!("CSV needs columns `n` and `rounds`");
    };
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parse_err = || format!("row {}", line + 2);
        let n: u64 = record[n_col].trim().parse().with_context(parse_err)?;
        let y: f64 = record[y_col].trim().parse().with_context(parse_err)?;
        points.push((n, y));
    }
    let fit = fit_loglinear(&points)?;
    emit(None, &serde_json::to_string_pretty(&fit)?)
}

fn run_report(args: ReportArgs) -> Result<()> {
    if args.n_max < 2 {
        bail!("--n-max must be at least 2");
    }
    let spec = GrowthSpec {
        scenario: args.scenario,
        m_values: args.m,
        n_values: SweepGrid::powers_of_two(args.n_max.ilog2()),
        replications: args.reps,
        master_seed: args.seed,
    };
    let (rows, samples) = growth_report(&spec, Execution::default())?;
    if let Some(path) = &args.samples {
        emit(Some(path), &samples_csv(&samples))?;
    }
    emit(args.csv.as_deref(), &growth_csv(&rows))
}
