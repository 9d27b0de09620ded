//! `nba`: generate, check, cost, solve and export bandwidth allocation
//! instances.
//!
//! Every command writes JSON to stdout and diagnostics to stderr. Exit codes:
//! 0 success, 1 infeasible / unsolved / not unimodular, 2 bad input,
//! 3 resource limit.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{debug, info};
use nba_core::feasibility::{Violation, ViolationReport};
use nba_core::gen::{generate, GenSpec, Generated};
use nba_core::io::{plan_to_json, InstanceFile, PlanFile};
use nba_core::milp::{encode, export_lp, export_mps};
use nba_core::scenarios::cdn::{cdn_solve, CdnInstance};
use nba_core::scenarios::cloudwan::{cloudwan_solve, CloudWanInstance, CwanLimits};
use nba_core::scenarios::lvdn::{lvdn_lower, LvdnInstance};
use nba_core::scenarios::rtcn::{rtcn_expand, RtcnInstance};
use nba_core::scenarios::{check_totally_unimodular, Strategy};
use nba_core::solvers::{improve_local, solve_exact, solve_greedy, ExactLimits, SolveReport, SolveStatus};
use nba_core::{check_feasible, total_cost, AllocationPlan, Error, Instance, ViolationKind};
use serde::de::DeserializeOwned;
use serde_json::json;

#[derive(Parser)]
#[command(name = "nba", version, about = "Bandwidth allocation under percentile billing")]
struct Cli {
    /// Solver threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance from a generator spec.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an instance, and a plan against it when given.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Total cost of a plan.
    Cost {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        strategy: Method,
        /// Tie-break seed for the greedy start.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Plan output (Cloud-WAN: the flow report).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Search node limit for exact solving.
        #[arg(long, default_value_t = 20_000_000)]
        max_nodes: u64,
        /// Move limit for local search.
        #[arg(long, default_value_t = 1000)]
        moves: usize,
    },
    /// Write the linearized model as LP or MPS.
    ExportMilp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Lp)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
    /// Total-unimodularity check of one Cloud-WAN slot matrix.
    CheckTu {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        slot: usize,
        #[arg(long, default_value_t = 6)]
        max_sub: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Exact,
    Greedy,
    Local,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Lp,
    Mps,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Resource(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Resource(_) => Failure::Resource(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

type Run = Result<(String, u8), Failure>;

fn pretty(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("value serializes")
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Deserializes `text` as `T`, naming the offending field on failure.
fn parse<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, Failure> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        Failure::Input(format!("{}: at `{at}`: {}", path.display(), e.inner()))
    })
}

enum Loaded {
    Generic(Instance),
    Cdn(CdnInstance),
    /// LVDN or RTCN, already lowered.
    Lowered(Instance),
    Cwan(CloudWanInstance),
}

fn load_instance(path: &Path) -> Result<Loaded, Failure> {
    #[derive(serde::Deserialize)]
    struct Probe {
        schema: Option<String>,
    }
    let text = read(path)?;
    let probe: Probe = parse(path, &text)?;
    let loaded = match probe.schema.as_deref() {
        Some("nba-cdn/1") => {
            let cdn: CdnInstance = parse(path, &text)?;
            cdn.validate()?;
            Loaded::Cdn(cdn)
        }
        Some("nba-lvdn/1") => {
            let lvdn: LvdnInstance = parse(path, &text)?;
            Loaded::Lowered(lvdn_lower(&lvdn)?)
        }
        Some("nba-rtcn/1") => {
            let rtcn: RtcnInstance = parse(path, &text)?;
            Loaded::Lowered(lvdn_lower(&rtcn_expand(&rtcn)?)?)
        }
        Some("nba-cwan/1") => {
            let cw: CloudWanInstance = parse(path, &text)?;
            cw.validate()?;
            Loaded::Cwan(cw)
        }
        _ => {
            let file: InstanceFile = parse(path, &text)?;
            Loaded::Generic(Instance::try_from(file)?)
        }
    };
    debug!("loaded {}", path.display());
    Ok(loaded)
}

fn load_plan(path: &Path) -> Result<AllocationPlan, Failure> {
    let text = read(path)?;
    let file: PlanFile = parse(path, &text)?;
    Ok(AllocationPlan::try_from(file)?)
}

fn unsupported(what: &str) -> Failure {
    Failure::Input(format!("{what} is not defined for Cloud-WAN instances"))
}

fn cdn_violations(cdn: &CdnInstance, plan: &AllocationPlan) -> Result<Vec<Violation>, Failure> {
    Ok(cdn
        .overloads(plan)?
        .into_iter()
        .map(|(t, node, measured)| Violation {
            kind: ViolationKind::EgressCapExceeded,
            t,
            s: None,
            node: Some(node),
            edge: None,
            measured,
            bound: cdn.caps[node - 1],
        })
        .collect())
}

fn validate(instance: &Path, plan: Option<&Path>) -> Run {
    let loaded = load_instance(instance)?;
    let Some(plan) = plan else {
        return Ok((pretty(&json!({ "valid": true })), 0));
    };
    let plan = load_plan(plan)?;
    let violations = match &loaded {
        Loaded::Generic(inst) | Loaded::Lowered(inst) => {
            plan.check_shape(inst)?;
            check_feasible(inst, &plan)
        }
        Loaded::Cdn(cdn) => cdn_violations(cdn, &plan)?,
        Loaded::Cwan(_) => return Err(unsupported("plan validation")),
    };
    let report = ViolationReport::new(violations);
    let code = u8::from(!report.feasible);
    Ok((pretty(&report), code))
}

fn cost(instance: &Path, plan: &Path) -> Run {
    let loaded = load_instance(instance)?;
    let plan = load_plan(plan)?;
    let cost = match &loaded {
        Loaded::Generic(inst) | Loaded::Lowered(inst) => total_cost(inst, &plan)?,
        Loaded::Cdn(cdn) => cdn.cost(&plan)?,
        Loaded::Cwan(_) => return Err(unsupported("plan costing")),
    };
    Ok((pretty(&json!({ "cost": cost })), 0))
}

fn solve_generic(inst: &Instance, method: Method, seed: u64, workers: usize, max_nodes: u64, moves: usize) -> Result<SolveReport, Failure> {
    Ok(match method {
        Method::Exact => solve_exact(
            inst,
            &ExactLimits {
                max_nodes,
                workers,
                ..ExactLimits::default()
            },
        )?,
        Method::Greedy => solve_greedy(inst, seed),
        Method::Local => {
            let start = solve_greedy(inst, seed);
            if start.status == SolveStatus::Infeasible {
                start
            } else {
                improve_local(inst, &start.plan, moves)?
            }
        }
    })
}

struct SolveArgs<'a> {
    instance: &'a Path,
    method: Method,
    seed: u64,
    out: Option<&'a Path>,
    report: Option<&'a Path>,
    max_nodes: u64,
    moves: usize,
    workers: usize,
}

fn solve(a: SolveArgs) -> Run {
    let scenario_strategy = || match a.method {
        Method::Exact => Ok(Strategy::Exact),
        Method::Greedy => Ok(Strategy::Greedy),
        Method::Local => Err(Failure::Input("local search applies to generic, LVDN and RTCN instances only".into())),
    };
    let report = match load_instance(a.instance)? {
        Loaded::Cwan(cw) => {
            let report = cloudwan_solve(&cw, scenario_strategy()?, &CwanLimits::default())?;
            let text = report.to_json();
            for path in [a.out, a.report].into_iter().flatten() {
                write(path, &text)?;
            }
            let code = u8::from(report.status == SolveStatus::Infeasible);
            return Ok((text, code));
        }
        Loaded::Cdn(cdn) => cdn_solve(&cdn, scenario_strategy()?, a.max_nodes)?,
        Loaded::Generic(inst) | Loaded::Lowered(inst) => solve_generic(&inst, a.method, a.seed, a.workers, a.max_nodes, a.moves)?,
    };
    info!("solve finished: {:?}, cost {:?}", report.status, report.cost);
    if let Some(path) = a.out {
        write(path, &plan_to_json(&report.plan))?;
    }
    let text = report.to_json();
    if let Some(path) = a.report {
        write(path, &text)?;
    }
    let code = u8::from(report.status == SolveStatus::Infeasible);
    Ok((text, code))
}

fn export(instance: &Path, format: Format, out: &Path) -> Run {
    let inst = match load_instance(instance)? {
        Loaded::Generic(i) | Loaded::Lowered(i) => i,
        Loaded::Cdn(_) => return Err(Failure::Input("CDN instances have no generic model; solve them directly".into())),
        Loaded::Cwan(_) => return Err(unsupported("MILP export")),
    };
    let model = encode(&inst)?;
    let (text, name) = match format {
        Format::Lp => (export_lp(&model), "lp"),
        Format::Mps => (export_mps(&model), "mps"),
    };
    write(out, &text)?;
    let summary = json!({
        "format": name,
        "out": out.display().to_string(),
        "variables": model.variables.len(),
        "constraints": model.constraints.len(),
    });
    Ok((pretty(&summary), 0))
}

fn check_tu(instance: &Path, slot: usize, max_sub: usize, workers: usize) -> Run {
    let Loaded::Cwan(cw) = load_instance(instance)? else {
        return Err(Failure::Input("check-tu needs a Cloud-WAN instance".into()));
    };
    let report = check_totally_unimodular(&cw, slot, max_sub, workers)?;
    let code = u8::from(!report.unimodular);
    Ok((pretty(&report), code))
}

fn gen(spec: &Path, out: Option<&Path>) -> Run {
    let text = read(spec)?;
    parse::<GenSpec>(spec, &text)?;
    let generated = generate(&GenSpec::from_json(&text)?)?;
    let body = generated.to_json();
    let Some(out) = out else {
        return Ok((body, 0));
    };
    write(out, &body)?;
    let kind = match generated {
        Generated::Generic(_) => "generic",
        Generated::Cdn(_) => "cdn",
        Generated::Lvdn(_) => "lvdn",
        Generated::Rtcn(_) => "rtcn",
        Generated::Cwan(_) => "cwan",
    };
    Ok((pretty(&json!({ "scenario": kind, "out": out.display().to_string() })), 0))
}

#[cfg(feature = "parallel")]
fn set_workers(workers: usize) {
    if workers > 1 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn set_workers(_: usize) {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NBA_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{e}");
            println!("{}", json!({ "error": "usage", "message": e.kind().to_string() }));
            return ExitCode::from(2);
        }
    };
    set_workers(cli.workers);
    let outcome = match &cli.command {
        Command::Gen { spec, out } => gen(spec, out.as_deref()),
        Command::Validate { instance, plan } => validate(instance, plan.as_deref()),
        Command::Cost { instance, plan } => cost(instance, plan),
        Command::Solve {
            instance,
            strategy,
            seed,
            out,
            report,
            max_nodes,
            moves,
        } => solve(SolveArgs {
            instance,
            method: *strategy,
            seed: *seed,
            out: out.as_deref(),
            report: report.as_deref(),
            max_nodes: *max_nodes,
            moves: *moves,
            workers: cli.workers,
        }),
        Command::ExportMilp { instance, format, out } => export(instance, *format, out),
        Command::CheckTu { instance, slot, max_sub } => check_tu(instance, *slot, *max_sub, cli.workers),
    };
    match outcome {
        Ok((body, code)) => {
            println!("{}", body.trim_end());
            ExitCode::from(code)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            println!("{}", json!({ "error": "input", "message": msg }));
            ExitCode::from(2)
        }
        Err(Failure::Resource(msg)) => {
            eprintln!("error: {msg}");
            println!("{}", json!({ "error": "resource", "message": msg }));
            ExitCode::from(3)
        }
    }
}
