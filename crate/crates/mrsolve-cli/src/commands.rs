use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use mrsolve::maxmr::solve_max_mr;
use mrsolve::model::{evaluate_indirect, Instance};
use mrsolve::npcst::euclid::{solve_npcsta, BpcstSubsolver, EuclidConfig};
use mrsolve::npcst::general::{solve_npcst_general, GeneralConfig, DEFAULT_A};
use mrsolve::npcst::NpcstInstance;
use mrsolve::oracles::{exact_max_mr, exact_npcst, exact_sum_mr, OracleBudget};
use mrsolve::summr::{solve_sum_mr, LpMode, MraConfig, Selection, SumMrConfig};

use crate::gen::{generate, GenParams, Kind};
use crate::instance_file::{parse_instance_str, InstanceFile, ParseError};
use crate::result_file::{aggregate, instance_hash, latencies_of, sha256_hex, verify, Objective, ResultFile, Service};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {err}")]
    Parse { path: String, err: ParseError },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Solver(#[from] mrsolve::Error),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Solver(_) => 3,
            _ => 2,
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> Value {
        let mut e = json!({ "message": self.to_string() });
        let kind = match self {
            CliError::Parse { path, err } => {
                e["path"] = json!(path);
                e["line"] = json!(err.line);
                e["field"] = json!(err.field);
                "parse"
            }
            CliError::Io(_) => "io",
            CliError::Solver(mrsolve::Error::CapExceeded(_)) => "cap-exceeded",
            CliError::Solver(mrsolve::Error::Invalid(_)) => "invalid-input",
            CliError::Solver(_) => "solver",
            CliError::Verify(_) => "verify",
            CliError::Usage(_) => "usage",
        };
        e["kind"] = json!(kind);
        json!({ "error": e })
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "mrsolve", version, about = "Movement repairmen solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub instance: PathBuf,
    /// Result file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpChoice {
    Exact,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Sum,
    Max,
    Npcst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Subsolver {
    Exact,
    Greedy,
}

#[derive(Debug, Args)]
pub struct Caps {
    #[arg(long, default_value_t = 6)]
    pub cap_nodes: usize,
    #[arg(long, default_value_t = 4)]
    pub cap_clients: usize,
    #[arg(long, default_value_t = 2)]
    pub cap_repairmen: usize,
}

impl Caps {
    fn budget(&self) -> OracleBudget {
        OracleBudget {
            nodes: self.cap_nodes,
            clients: self.cap_clients,
            repairmen: self.cap_repairmen,
            ..Default::default()
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sum-MR: LP, rounding and the transform to perfect service.
    SolveSum {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "exact")]
        mode: LpChoice,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        /// Trees sampled by the oracle-mode pricer.
        #[arg(long)]
        frt_count: Option<usize>,
        #[arg(long, default_value_t = 500)]
        max_rounds: usize,
        /// Sample tours instead of the derandomized choice.
        #[arg(long)]
        randomized: bool,
    },
    /// Max-MR for equal-speed repairmen.
    SolveMax {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// General-metric NPCST on the instance's npcst block.
    Npcst {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_A)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long)]
        frt_count: Option<usize>,
    },
    /// Planar NPCST on a Euclidean instance's npcst block.
    NpcstEuclid {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "exact")]
        subsolver: Subsolver,
    },
    /// Samples dominating tree embeddings and reports their mean distortion.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        frt_count: Option<usize>,
    },
    /// Exact brute-force optimum.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        problem: Problem,
        #[command(flatten)]
        caps: Caps,
        /// Directory of cached results keyed by content hash.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Writes a generated instance file.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 6)]
        nodes: usize,
        #[arg(long, default_value_t = 1)]
        repairmen: usize,
        #[arg(long, default_value_t = 3)]
        clients: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        equal_speeds: bool,
        #[arg(long)]
        npcst: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Algorithm over oracle ratios on a seeded suite of generated instances.
    Bench {
        #[arg(long, value_enum)]
        problem: Problem,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        nodes: usize,
        #[arg(long, default_value_t = 1)]
        repairmen: usize,
        #[arg(long, default_value_t = 3)]
        clients: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-checks a result file against its instance.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        result: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn load_instance(path: &Path) -> Result<InstanceFile> {
    parse_instance_str(&read(path)?).map_err(|err| CliError::Parse {
        path: path.display().to_string(),
        err,
    })
}

fn npcst_instance<'a>(file: &InstanceFile, inst: &'a Instance) -> Result<NpcstInstance<'a>> {
    let (root, budget, clients) = file.npcst_parts().ok_or_else(|| CliError::Usage("instance has no npcst block".into()))?;
    Ok(NpcstInstance {
        metric: &inst.metric,
        root,
        clients,
        budget,
    })
}

fn schedule_result(command: &str, file: &InstanceFile, seed: u64, config: Value, kind: Objective, service: Service, sched: &mrsolve::model::Schedule, latencies: Vec<Option<f64>>, certificates: Value) -> ResultFile {
    ResultFile {
        command: command.into(),
        instance_sha256: instance_hash(file),
        seed,
        config,
        objective_kind: kind,
        objective: aggregate(&latencies, kind),
        service: Some(service),
        latencies,
        walks: sched.walks.clone(),
        assignments: sched.assignments.clone(),
        tree: None,
        stretch: None,
        certificates,
    }
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("serializable")
}

/// Runs one command; returns the process exit code on success.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::SolveSum {
            common,
            mode,
            mu,
            omega,
            epsilon,
            frt_count,
            max_rounds,
            randomized,
        } => {
            let file = load_instance(&common.instance)?;
            let inst = file.instance()?;
            let cfg = SumMrConfig {
                mode: match mode {
                    LpChoice::Exact => LpMode::Exact { node_cap: 14 },
                    LpChoice::Oracle => LpMode::Oracle(GeneralConfig {
                        seed: common.seed,
                        trees: frt_count,
                        ..Default::default()
                    }),
                },
                mu,
                omega,
                eps: epsilon,
                max_rounds,
                mra: MraConfig {
                    selection: if randomized { Selection::Randomized { seed: common.seed } } else { Selection::Derandomized },
                    ..Default::default()
                },
                ..Default::default()
            };
            let rep = solve_sum_mr(&inst, &cfg)?;
            let certs = json!({
                "lp_objective": rep.lp_objective,
                "lp_rounds": rep.lp_stats.rounds,
                "lp_converged": rep.lp_stats.converged,
                "mu": rep.mu,
                "omega": rep.omega,
                "scale": rep.scale,
                "indirect_total": rep.indirect_total,
                "ratio_to_lp": rep.ratio_to_lp,
                "rounding": to_value(&rep.certificates),
                "steps": to_value(&rep.trace.steps.iter().map(|s| json!({"stamp": s.stamp, "q": s.q, "f": s.f, "served": s.served.len(), "required": s.required})).collect::<Vec<_>>()),
                "decay": to_value(&rep.trace.decay),
                "perfect_alpha": rep.perfect.alpha,
                "perfect_worst_ratio": rep.perfect.worst_ratio(),
                "perfect_over_ratio": to_value(&rep.perfect.over_ratio),
            });
            let res = schedule_result("solve-sum", &file, common.seed, to_value(&cfg), Objective::Sum, Service::Perfect, &rep.schedule, rep.latencies.iter().map(|&l| l.is_finite().then_some(l)).collect(), certs);
            write_out(common.out.as_deref(), &res.to_text())?;
            Ok(0)
        }
        Command::SolveMax { common, epsilon } => {
            let file = load_instance(&common.instance)?;
            let inst = file.instance()?;
            let rep = solve_max_mr(&inst, epsilon)?;
            let certs = json!({
                "t_star": rep.t_star,
                "t_rejected": rep.t_rejected,
                "latency_bound": rep.latency_bound,
                "probes": to_value(&rep.probes),
                "leaders": rep.tagging.as_ref().map(|t| t.leaders.clone()),
            });
            let res = schedule_result("solve-max", &file, common.seed, json!({ "epsilon": epsilon }), Objective::Max, Service::Indirect, &rep.schedule, latencies_of(&rep.evaluation), certs);
            write_out(common.out.as_deref(), &res.to_text())?;
            Ok(0)
        }
        Command::Npcst { common, a, epsilon, frt_count } => {
            let file = load_instance(&common.instance)?;
            let inst = file.instance()?;
            let ni = npcst_instance(&file, &inst)?;
            let cfg = GeneralConfig {
                a,
                eps: epsilon,
                seed: common.seed,
                trees: frt_count,
                ..Default::default()
            };
            let s = solve_npcst_general(&ni, &cfg)?;
            let res = tree_result("npcst", &file, common.seed, to_value(&cfg), &s, json!({}));
            write_out(common.out.as_deref(), &res.to_text())?;
            Ok(0)
        }
        Command::NpcstEuclid { common, epsilon, subsolver } => {
            let file = load_instance(&common.instance)?;
            let inst = file.instance()?;
            let coords = inst.coords.clone().ok_or_else(|| CliError::Usage("npcst-euclid needs a euclidean instance".into()))?;
            let ni = npcst_instance(&file, &inst)?;
            let cfg = EuclidConfig {
                eps: epsilon,
                subsolver: match subsolver {
                    Subsolver::Exact => BpcstSubsolver::Exact,
                    Subsolver::Greedy => BpcstSubsolver::Greedy,
                },
            };
            let s = solve_npcsta(&ni, &coords, &cfg)?;
            let extra = json!({
                "radius_ratio": s.p,
                "served": s.served,
                "tiles": s.aux.tiles.len(),
                "side": s.grid.side,
            });
            let res = tree_result("npcst-euclid", &file, common.seed, to_value(&cfg), &s.solution, extra);
            write_out(common.out.as_deref(), &res.to_text())?;
            Ok(0)
        }
        Command::Embed { common, frt_count } => {
            let file = load_instance(&common.instance)?;
            let inst = file.instance()?;
            let count = frt_count.unwrap_or_else(|| mrsolve::frt::default_count(inst.n()));
            let dist = mrsolve::frt::sample_distribution(&inst.metric, count, common.seed);
            let mean = mrsolve::frt::mean_distortion(&inst.metric, &dist);
            let res = ResultFile {
                command: "embed".into(),
                instance_sha256: instance_hash(&file),
                seed: common.seed,
                config: json!({ "count": count }),
                objective_kind: Objective::Distortion,
                objective: Some(mean),
                service: None,
                latencies: vec![],
                walks: vec![],
                assignments: vec![],
                tree: None,
                stretch: None,
                certificates: json!({
                    "tree_diameters": dist.trees.iter().map(|t| t.diameter()).collect::<Vec<_>>(),
                    "betas": dist.trees.iter().map(|t| t.beta).collect::<Vec<_>>(),
                }),
            };
            write_out(common.out.as_deref(), &res.to_text())?;
            Ok(0)
        }
        Command::Oracle { common, problem, caps, cache } => {
            let file = load_instance(&common.instance)?;
            let budget = caps.budget();
            let key = sha256_hex(&format!("{}\n{}\n{}", file.to_text(), to_value(&problem), to_value(&budget)));
            let cached = cache.as_ref().map(|d| d.join(format!("{key}.result")));
            if let Some(p) = cached.as_ref().filter(|p| p.exists()) {
                write_out(common.out.as_deref(), &read(p)?)?;
                return Ok(0);
            }
            let res = oracle_result(&file, problem, &budget, common.seed)?;
            let text = res.to_text();
            if let (Some(dir), Some(p)) = (cache.as_ref(), cached.as_ref()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
                std::fs::write(p, &text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            }
            write_out(common.out.as_deref(), &text)?;
            Ok(0)
        }
        Command::Gen {
            kind,
            nodes,
            repairmen,
            clients,
            seed,
            equal_speeds,
            npcst,
            out,
        } => {
            let file = generate(&GenParams {
                kind,
                nodes,
                repairmen,
                clients,
                seed,
                equal_speeds,
                npcst,
            });
            write_out(out.as_deref(), &file.to_text())?;
            Ok(0)
        }
        Command::Bench {
            problem,
            seeds,
            seed,
            nodes,
            repairmen,
            clients,
            epsilon,
            out,
        } => {
            let table = bench(problem, seed, seeds, nodes, repairmen, clients, epsilon)?;
            write_out(out.as_deref(), &table)?;
            Ok(0)
        }
        Command::Verify { instance, result } => {
            let file = load_instance(&instance)?;
            let res = ResultFile::from_text(&read(&result)?).map_err(CliError::Verify)?;
            let rep = verify(&res, &file).map_err(CliError::Verify)?;
            println!("{}", json!({ "verified": true, "command": rep.command, "checks": rep.checks }));
            Ok(0)
        }
    }
}

fn tree_result(command: &str, file: &InstanceFile, seed: u64, config: Value, s: &mrsolve::npcst::TriCriteriaSolution, extra: Value) -> ResultFile {
    ResultFile {
        command: command.into(),
        instance_sha256: instance_hash(file),
        seed,
        config,
        objective_kind: Objective::Profit,
        objective: Some(s.profit),
        service: None,
        latencies: vec![],
        walks: vec![],
        assignments: vec![],
        tree: Some(s.tree.clone()),
        stretch: Some(s.sigma),
        certificates: json!({
            "sigma": s.sigma,
            "phi": s.phi,
            "sigma_measured": s.sigma_measured,
            "phi_measured": s.phi_measured,
            "hit": s.hit,
            "extra": extra,
        }),
    }
}

fn oracle_result(file: &InstanceFile, problem: Problem, budget: &OracleBudget, seed: u64) -> Result<ResultFile> {
    let inst = file.instance()?;
    let config = json!({ "problem": problem, "caps": to_value(budget) });
    Ok(match problem {
        Problem::Sum | Problem::Max => {
            let (ex, kind) = match problem {
                Problem::Sum => (exact_sum_mr(&inst, budget)?, Objective::Sum),
                _ => (exact_max_mr(&inst, budget)?, Objective::Max),
            };
            let ev = evaluate_indirect(&inst, &ex.schedule)?;
            schedule_result("oracle", file, seed, config, kind, Service::Indirect, &ex.schedule, latencies_of(&ev), json!({ "search_objective": ex.objective }))
        }
        Problem::Npcst => {
            let ni = npcst_instance(file, &inst)?;
            let opt = exact_npcst(&ni)?;
            ResultFile {
                command: "oracle".into(),
                instance_sha256: instance_hash(file),
                seed,
                config,
                objective_kind: Objective::Profit,
                objective: Some(opt),
                service: None,
                latencies: vec![],
                walks: vec![],
                assignments: vec![],
                tree: None,
                stretch: None,
                certificates: json!({}),
            }
        }
    })
}

/// One row per seed: algorithm objective, oracle objective and their ratio.
pub fn bench(problem: Problem, seed: u64, seeds: u64, nodes: usize, repairmen: usize, clients: usize, epsilon: f64) -> Result<String> {
    let rows: Vec<Result<String>> = (seed..seed + seeds)
        .into_par_iter()
        .map(|s| {
            let params = GenParams {
                kind: Kind::RandomMetric,
                nodes,
                repairmen,
                clients,
                seed: s,
                equal_speeds: problem == Problem::Max,
                npcst: problem == Problem::Npcst,
            };
            let file = generate(&params);
            let inst = file.instance()?;
            let budget = OracleBudget {
                nodes: nodes.max(6),
                clients: clients.max(4),
                repairmen: repairmen.max(2),
                ..Default::default()
            };
            let (alg, opt) = match problem {
                Problem::Sum => (solve_sum_mr(&inst, &SumMrConfig::default())?.total, exact_sum_mr(&inst, &budget)?.objective),
                Problem::Max => (solve_max_mr(&inst, epsilon)?.max_latency, exact_max_mr(&inst, &budget)?.objective),
                Problem::Npcst => {
                    let ni = npcst_instance(&file, &inst)?;
                    let cfg = GeneralConfig { seed: s, ..Default::default() };
                    (solve_npcst_general(&ni, &cfg)?.profit, exact_npcst(&ni)?)
                }
            };
            let ratio = match problem {
                Problem::Npcst if alg > 0.0 => opt / alg,
                Problem::Npcst => if opt == 0.0 { 1.0 } else { f64::INFINITY },
                _ if opt > 0.0 => alg / opt,
                _ => if alg == 0.0 { 1.0 } else { f64::INFINITY },
            };
            Ok(format!("{s}\t{nodes}\t{repairmen}\t{clients}\t{alg}\t{opt}\t{ratio:.6}"))
        })
        .collect();
    let mut out = String::from("seed\tnodes\trepairmen\tclients\talgorithm\toracle\tratio\n");
    for r in rows {
        out.push_str(&r?);
        out.push('\n');
    }
    Ok(out)
}
