//! Command-line front end. Every subcommand writes its payload to `--out`
//! (or stdout) and, next to a file payload, a `<out>.meta.json` record of
//! the tool version, seed and full argument list. Payloads carry no
//! timestamps, so identical arguments reproduce them byte for byte.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::divergence::{all_node_td, DivergenceReport};
use crate::dynamics::{
    check_max_distribution, check_spatial_dynamics, equivalent_condition_residual,
    temporal_rate_bound, CheckMode, CouplingModel, DistributionCheck, DivergenceProfile,
    DivergenceTrajectory,
};
use crate::error::{Error, Result};
use crate::flow::{EvalMode, FlowField};
use crate::network::{Network, NodeId, Route};
use crate::planner::{
    planning_baseline, solve_plan, verify_plan, PlanConstraint, PlanProblem, PlanSlacks,
};
use crate::routing::{route_pairs, route_set, Router, DEFAULT_DELTA, DEFAULT_ENUMERATION_CAP};
use crate::throughput::estimate_throughput;
use crate::throughput::experiment::{
    gap_experiment, instance, radius_config, radius_experiment, to_csv, ExperimentRouter,
    RadiusRow, Topo, DEFAULT_INTERVALS, DEFAULT_JITTER, DEFAULT_STEPS,
};
use crate::topology::{gen_fattree, gen_fattree_pods, gen_jellyfish, gen_ring};
use crate::traffic::{gen_traffic, gen_traffic_for, CapacityMatrix, TrafficMatrix};

#[derive(Debug, Parser)]
#[command(
    name = "tdnet",
    version,
    about = "Traffic divergence toolkit for networks"
)]
pub struct Cli {
    /// Worker threads for parallel stages; output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a topology.
    Gen {
        #[command(subcommand)]
        topo: GenTopo,
    },
    /// Generate a doubly stochastic traffic matrix, optionally with a
    /// uniform link capacity matrix.
    GenTraffic(GenTrafficArgs),
    /// Node, link and route divergences of a flow field.
    Analyze(AnalyzeArgs),
    /// Check spatial and temporal dynamics of a coupling model.
    Dynamics(DynamicsArgs),
    /// Congestion-avoiding minimum-hop routes between two nodes.
    Route(RouteArgs),
    /// Closed-form throughput estimate.
    Throughput(ThroughputArgs),
    /// Seeded experiment runs, written as CSV.
    Experiment {
        #[command(subcommand)]
        kind: ExperimentKind,
    },
    /// Divergence plan minimizing the power proxy.
    Plan(PlanArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenTopo {
    Jellyfish {
        #[arg(long)]
        switches: usize,
        #[arg(long, default_value_t = 4)]
        degree: usize,
        #[arg(long, default_value_t = 10)]
        servers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full k-ary fat-tree, or a truncated one with `--pods` and `--cores`.
    Fattree {
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 8)]
        servers: usize,
        #[arg(long, requires = "cores")]
        pods: Option<usize>,
        #[arg(long, requires = "pods")]
        cores: Option<usize>,
        /// Accepted for uniformity; the construction is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Ring {
        #[arg(long, default_value_t = 6)]
        backbone: usize,
        #[arg(long, value_delimiter = ',', default_value = "3,3,3,2,1,1")]
        branches: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct GenTrafficArgs {
    /// Number of switches; defaults to the switches of `--network`.
    #[arg(long, required_unless_present = "network")]
    pub switches: Option<usize>,
    #[arg(long)]
    pub marginal: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Spans the matrix over this network's switches (all nodes if none are
    /// marked).
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long, requires = "capacity_out")]
    pub link_capacity: Option<f64>,
    /// Where to write a matrix with `--link-capacity` on every link.
    #[arg(long, requires_all = ["network", "link_capacity"])]
    pub capacity_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub flows: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    /// Average flows over `[t, t + window]` instead of taking them at `t`.
    #[arg(long)]
    pub window: Option<f64>,
    /// A route as comma-separated node ids; repeatable.
    #[arg(long = "route")]
    pub routes: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DynamicsCheck {
    Thm1,
    Bound,
    Distribution,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub coupling: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, value_enum)]
    pub check: DynamicsCheck,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Highest derivative order for the identity check.
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Time derivatives of divergence taken from a flow field.
    #[arg(long, conflicts_with = "profile")]
    pub flows: Option<PathBuf>,
    /// Time derivatives of divergence taken from per-node profiles.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RouteArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub flows: PathBuf,
    #[arg(long)]
    pub src: NodeId,
    #[arg(long)]
    pub dst: NodeId,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThroughputArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub traffic: PathBuf,
    #[arg(long)]
    pub flows: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopoArg {
    Jellyfish,
    Fattree,
}

impl From<TopoArg> for Topo {
    fn from(t: TopoArg) -> Self {
        match t {
            TopoArg::Jellyfish => Topo::Jellyfish,
            TopoArg::Fattree => Topo::Fattree,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouterArg {
    TdAware,
    HopOnly,
}

impl From<RouterArg> for ExperimentRouter {
    fn from(r: RouterArg) -> Self {
        match r {
            RouterArg::TdAware => ExperimentRouter::TdAware,
            RouterArg::HopOnly => ExperimentRouter::HopOnly,
        }
    }
}

/// `a..b` (inclusive), a comma list, or a single seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

impl FromStr for Seeds {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |x: &str| {
            x.trim()
                .parse::<u64>()
                .map_err(|e| format!("bad seed '{x}': {e}"))
        };
        let seeds = if let Some((a, b)) = s.split_once("..") {
            let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
            if a > b {
                return Err(format!("empty seed range {s}"));
            }
            (a..=b).collect()
        } else {
            s.split(',')
                .map(num)
                .collect::<std::result::Result<Vec<_>, _>>()?
        };
        Ok(Seeds(seeds))
    }
}

#[derive(Debug, Subcommand)]
pub enum ExperimentKind {
    /// Estimate against LP oracle, one row per (size, seed).
    Gap {
        #[arg(long, value_enum)]
        topo: TopoArg,
        #[arg(long, value_delimiter = ',', default_value = "6,8,10,12")]
        sizes: Vec<usize>,
        #[arg(long, default_value = "1..20")]
        seeds: Seeds,
        #[arg(long, value_enum, default_value = "td-aware")]
        router: RouterArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distribution radius over alternating OFF/ON intervals. Several seeds
    /// concatenate their rows in seed order.
    Radius {
        #[arg(long, value_enum)]
        topo: TopoArg,
        #[arg(long, default_value_t = 12)]
        size: usize,
        #[arg(long, default_value = "1..10")]
        seeds: Seeds,
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_INTERVALS)]
        intervals: usize,
        #[arg(long, default_value_t = DEFAULT_JITTER)]
        jitter: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub traffic: PathBuf,
    #[arg(long)]
    pub capacity: PathBuf,
    /// Rate limit on divergence change.
    #[arg(long)]
    pub m: f64,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// JSON array of observed divergences; observed under divergence-aware
    /// control when absent.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long, default_value_t = crate::planner::DEFAULT_MIN_DIVERGENCE)]
    pub lower: f64,
    #[arg(long, default_value_t = crate::planner::DEFAULT_MAX_DIVERGENCE)]
    pub upper: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Meta {
    tool: &'static str,
    version: &'static str,
    command: String,
    seed: Option<u64>,
    jobs: Option<usize>,
    args: Vec<String>,
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

/// Runs one command line; returns the process exit code (0 success, 1 domain
/// error, 2 usage error).
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("TDNET_LOG", "warn"))
        .try_init();
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let args = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let result = match cli.jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cli.command, cli.jobs, args)),
            Err(e) => Err(Failure::Usage(format!("--jobs {n}: {e}"))),
        },
        None => run(&cli.command, None, args),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor the full grammar, try 'tdnet --help'.");
            2
        }
    }
}

fn run(cmd: &Command, jobs: Option<usize>, args: Vec<String>) -> std::result::Result<(), Failure> {
    let meta = |command: &str, seed: Option<u64>| Meta {
        tool: "tdnet",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        seed,
        jobs,
        args: args.clone(),
    };
    match cmd {
        Command::Gen { topo } => {
            let (net, out, seed) = match topo {
                GenTopo::Jellyfish {
                    switches,
                    degree,
                    servers,
                    seed,
                    out,
                } => (
                    gen_jellyfish(*switches, *degree, *servers, *seed)?,
                    out,
                    *seed,
                ),
                GenTopo::Fattree {
                    k,
                    servers,
                    pods,
                    cores,
                    seed,
                    out,
                } => {
                    let (net, _) = match (pods, cores) {
                        (Some(p), Some(c)) => gen_fattree_pods(*k, *p, *c, *servers)?,
                        _ => gen_fattree(*k, *servers)?,
                    };
                    (net, out, *seed)
                }
                GenTopo::Ring {
                    backbone,
                    branches,
                    seed,
                    out,
                } => (gen_ring(*backbone, branches)?, out, *seed),
            };
            emit(out.as_deref(), &net.to_json()?, &meta("gen", Some(seed)))?;
        }
        Command::GenTraffic(a) => {
            let net = a.network.as_deref().map(Network::load).transpose()?;
            let tm = match &net {
                Some(net) => {
                    let mut ids = net.switches();
                    if ids.is_empty() {
                        ids = net.nodes().collect();
                    }
                    if let Some(n) = a.switches.filter(|&n| n != ids.len()) {
                        return Err(Failure::Usage(format!(
                            "--switches {n} disagrees with the {} switches of --network",
                            ids.len()
                        )));
                    }
                    gen_traffic_for(ids, a.marginal, a.seed)?
                }
                None => gen_traffic(a.switches.unwrap_or_default(), a.marginal, a.seed)?,
            };
            let m = meta("gen-traffic", Some(a.seed));
            emit(a.out.as_deref(), &tm.to_csv()?, &m)?;
            if let (Some(net), Some(c), Some(path)) = (&net, a.link_capacity, &a.capacity_out) {
                let cm = CapacityMatrix::uniform(net, tm.ids().to_vec(), c)?;
                emit(Some(path), &cm.to_csv()?, &m)?;
            }
        }
        Command::Analyze(a) => {
            let net = Network::load(&a.network)?;
            let field = FlowField::load(&a.flows, &net)?;
            let mode = match a.window {
                Some(delta) => EvalMode::Windowed { delta },
                None => EvalMode::Instantaneous,
            };
            let routes = a
                .routes
                .iter()
                .map(|r| parse_route(&net, r))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let report = DivergenceReport::compute(&net, &field, a.t, mode, &routes)?;
            emit(a.out.as_deref(), &pretty(&report)?, &meta("analyze", None))?;
        }
        Command::Dynamics(a) => {
            let net = Network::load(&a.network)?;
            let model = CouplingModel::load(&a.coupling, &net)?;
            let payload = match a.check {
                DynamicsCheck::Thm1 => pretty(&identity_report(&net, &model, a.t, a.order))?,
                DynamicsCheck::Bound => {
                    let trajectory: Box<dyn DivergenceTrajectory> = match (&a.flows, &a.profile) {
                        (Some(f), _) => Box::new(FlowField::load(f, &net)?),
                        (None, Some(p)) => {
                            let src = std::fs::read_to_string(p).map_err(Error::from)?;
                            Box::new(
                                serde_json::from_str::<DivergenceProfile>(&src)
                                    .map_err(Error::from)?,
                            )
                        }
                        (None, None) => {
                            return Err(Failure::Usage(
                                "--check bound needs --flows or --profile".into(),
                            ));
                        }
                    };
                    pretty(&bound_report(&net, &model, trajectory.as_ref(), a.t))?
                }
                DynamicsCheck::Distribution => {
                    pretty(&distribution_report(&net, &model, a.t, a.eps)?)?
                }
            };
            emit(a.out.as_deref(), &payload, &meta("dynamics", None))?;
        }
        Command::Route(a) => {
            let net = Network::load(&a.network)?;
            let field = FlowField::load(&a.flows, &net)?;
            let set = route_set(&net, &field, a.src, a.dst, a.t, a.delta)?;
            emit(a.out.as_deref(), &set.to_json()?, &meta("route", None))?;
        }
        Command::Throughput(a) => {
            let net = Network::load(&a.network)?;
            let tm = TrafficMatrix::load(&a.traffic)?;
            let field = FlowField::load(&a.flows, &net)?;
            let td = all_node_td(&net, &field, a.t)?;
            let pairs: Vec<_> = tm.demands().iter().map(|&(u, v, _)| (u, v)).collect();
            let router = Router::TdAware {
                delta: a.delta,
                cap: DEFAULT_ENUMERATION_CAP,
            };
            let routes = route_pairs(&net, &td, &pairs, router)?;
            let est = estimate_throughput(&net, &tm, &routes, &field, a.t)?;
            emit(a.out.as_deref(), &pretty(&est)?, &meta("throughput", None))?;
        }
        Command::Experiment { kind } => match kind {
            ExperimentKind::Gap {
                topo,
                sizes,
                seeds,
                router,
                out,
            } => {
                let rows = gap_experiment(sizes, (*topo).into(), &seeds.0, (*router).into())?;
                emit(
                    out.as_deref(),
                    &to_csv(&rows)?,
                    &meta("experiment gap", seeds.0.first().copied()),
                )?;
            }
            ExperimentKind::Radius {
                topo,
                size,
                seeds,
                steps,
                intervals,
                jitter,
                out,
            } => {
                let mut rows: Vec<RadiusRow> = Vec::new();
                for &seed in &seeds.0 {
                    let inst = instance((*topo).into(), *size, seed)?;
                    let mut cfg = radius_config(&inst, seed)?;
                    cfg.steps = *steps;
                    cfg.intervals = *intervals;
                    cfg.jitter = *jitter;
                    rows.extend(radius_experiment(&inst.net, &inst.tm, &cfg)?);
                }
                emit(
                    out.as_deref(),
                    &to_csv(&rows)?,
                    &meta("experiment radius", seeds.0.first().copied()),
                )?;
            }
        },
        Command::Plan(a) => {
            let net = Network::load(&a.network)?;
            let tm = TrafficMatrix::load(&a.traffic)?;
            let cm = CapacityMatrix::load(&a.capacity)?;
            let observed = match &a.baseline {
                Some(p) => {
                    let src = std::fs::read_to_string(p).map_err(Error::from)?;
                    serde_json::from_str::<Vec<f64>>(&src).map_err(Error::from)?
                }
                None => planning_baseline(&net, &tm)?,
            };
            let problem = PlanProblem::new(net, tm, cm, a.m, observed, a.dt)?
                .with_bounds(a.lower, a.upper)?;
            let result = solve_plan(&problem)?;
            let slacks = verify_plan(&problem, &result.divergences);
            let report = PlanReport {
                divergences: &result.divergences,
                objective: result.objective,
                log_objective: result.log_objective,
                feasible: result.feasible,
                kkt_residual: result.kkt_residual,
                iterations: result.iterations,
                max_violation: result.max_violation,
                violated: result.violated,
                baseline: &problem.baseline,
                slacks,
            };
            emit(a.out.as_deref(), &pretty(&report)?, &meta("plan", None))?;
            result.require_feasible()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PlanReport<'a> {
    divergences: &'a [f64],
    objective: f64,
    log_objective: f64,
    feasible: bool,
    kkt_residual: f64,
    iterations: usize,
    max_violation: f64,
    violated: Option<PlanConstraint>,
    baseline: &'a [f64],
    slacks: PlanSlacks,
}

#[derive(Serialize)]
struct IdentityEntry {
    u: NodeId,
    v: NodeId,
    order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct IdentityReport {
    check: &'static str,
    t: f64,
    max_abs_residual: f64,
    entries: Vec<IdentityEntry>,
}

/// Every link in both orientations at orders `1..=order`; links the model
/// cannot differentiate are reported with their error.
fn identity_report(net: &Network, model: &CouplingModel, t: f64, order: usize) -> IdentityReport {
    let mut entries = Vec::new();
    for (u, v) in net.links() {
        for n in 1..=order {
            let (residual, error) = match check_spatial_dynamics(model, u, v, n, t) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            entries.push(IdentityEntry {
                u,
                v,
                order: n,
                residual,
                error,
            });
        }
    }
    let max_abs_residual = entries
        .iter()
        .filter_map(|e| e.residual)
        .fold(0.0, |m, r| f64::max(m, r.abs()));
    IdentityReport {
        check: "thm1",
        t,
        max_abs_residual,
        entries,
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum BoundEntry {
    Ok(crate::dynamics::TemporalBound),
    Err { node: NodeId, error: String },
}

#[derive(Serialize)]
struct BoundReport {
    check: &'static str,
    t: f64,
    /// Whether every node satisfies the Cauchy–Schwarz bound.
    cs_holds: bool,
    nodes: Vec<BoundEntry>,
}

fn bound_report(
    net: &Network,
    model: &CouplingModel,
    trajectory: &dyn DivergenceTrajectory,
    t: f64,
) -> BoundReport {
    let nodes: Vec<BoundEntry> = net
        .nodes()
        .filter(|&u| net.degree(u) > 0)
        .map(
            |u| match temporal_rate_bound(model, net, trajectory, u, t) {
                Ok(b) => BoundEntry::Ok(b),
                Err(e) => BoundEntry::Err {
                    node: u,
                    error: e.to_string(),
                },
            },
        )
        .collect();
    let cs_holds = nodes.iter().all(|e| match e {
        BoundEntry::Ok(b) => b.lhs <= b.cs_bound + 1e-12,
        BoundEntry::Err { .. } => true,
    });
    BoundReport {
        check: "bound",
        t,
        cs_holds,
        nodes,
    }
}

#[derive(Serialize)]
struct DistributionReport {
    check: &'static str,
    t: f64,
    global: DistributionCheck,
    local: DistributionCheck,
    /// Largest residual of the rearranged-rate condition over linked pairs.
    equivalent_condition_residual: Option<f64>,
}

fn distribution_report(
    net: &Network,
    model: &CouplingModel,
    t: f64,
    eps: f64,
) -> Result<DistributionReport> {
    let global = check_max_distribution(model, net, t, eps, CheckMode::Global)?;
    let local = check_max_distribution(model, net, t, eps, CheckMode::Local)?;
    let residual = net
        .links()
        .iter()
        .map(|&(u, v)| equivalent_condition_residual(model, net, u, v, t).map(f64::abs))
        .collect::<Result<Vec<_>>>()
        .ok()
        .map(|rs| rs.into_iter().fold(0.0, f64::max));
    Ok(DistributionReport {
        check: "distribution",
        t,
        global,
        local,
        equivalent_condition_residual: residual,
    })
}

fn parse_route(net: &Network, src: &str) -> std::result::Result<Route, Failure> {
    let nodes = src
        .split(',')
        .map(|x| x.trim().parse::<NodeId>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Failure::Usage(format!("--route '{src}': {e}")))?;
    Ok(Route::new(net, nodes)?)
}

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// Writes the payload to `out` (stdout when absent) and the meta record to
/// `<out>.meta.json`.
fn emit(out: Option<&Path>, payload: &str, meta: &Meta) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, payload)?;
            let mut side = path.as_os_str().to_owned();
            side.push(".meta.json");
            std::fs::write(PathBuf::from(side), pretty(meta)?)?;
        }
        None => {
            print!("{payload}");
            if !payload.ends_with('\n') {
                println!();
            }
        }
    }
    Ok(())
}
