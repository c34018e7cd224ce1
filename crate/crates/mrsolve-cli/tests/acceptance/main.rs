//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod brute;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use brute::rng;
use mrsolve::frt::{default_count, sample_distribution};
use mrsolve::lp::{solve_sum_mr_lp, ExactPricer, LpConfig};
use mrsolve::maxmr::{minmax_k_tree_cover, solve_max_mr};
use mrsolve::model::{build_time_grid, scale_instance, Instance, MetricSpace, Schedule, TimedWalk};
use mrsolve::npcst::euclid::{build_hex_tiling, color_tiles, solve_npcsta, BpcstSubsolver, EuclidConfig, HexGrid};
use mrsolve::npcst::general::{solve_npcst_general, GeneralConfig};
use mrsolve::npcst::{NpcstClient, NpcstInstance};
use mrsolve::oracles::{exact_max_mr, exact_minmax_cover, exact_npcst, exact_sum_mr, OracleBudget};
use mrsolve::summr::{solve_sum_mr, to_perfect, SolutionReport, SumMrConfig};
use mrsolve::treedp::{knapsack_max, solve_stscst, RootedTree, StscstInstance, TreeClient, DEFAULT_TABLE_CAP};
use mrsolve_cli::result_file::ResultFile;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn log2n(n: usize) -> f64 {
    (n as f64).log2()
}

// ---------------------------------------------------------------- 1

fn random_tree(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> RootedTree {
    let edges: Vec<(usize, usize, u64)> = (1..n).map(|v| (r.gen_range(0..v), v, r.gen_range(0..=3))).collect();
    RootedTree::with_costs(n, 0, &edges).unwrap()
}

fn tree_clients(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<TreeClient> {
    (0..r.gen_range(0..=6))
        .map(|_| TreeClient {
            node: r.gen_range(0..n),
            profit: r.gen_range(1..=8) as f64,
            radius: r.gen_range(1..=3) as f64,
        })
        .collect()
}

fn stscst_exactness() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = r.gen_range(1..=10);
        let tree = random_tree(&mut r, n);
        let clients = tree_clients(&mut r, n);
        let (b, b_hat) = (r.gen_range(0..=12), r.gen_range(0..=10));
        let x = r.gen_range(1..=2) as f64;
        let inst = StscstInstance {
            tree: tree.clone(),
            clients: clients.clone(),
            b,
            b_hat,
            x,
        };
        let got = solve_stscst(&inst, DEFAULT_TABLE_CAP).unwrap().profit;
        if got != brute::stscst(&tree, &clients, b, b_hat as f64, x) {
            mismatches += 1;
        }
    }
    let t = start.elapsed();
    outcome(mismatches == 0 && t < Duration::from_secs(30), format!("200 trees, {mismatches} mismatches, {:.1}s (limit 30s)", t.as_secs_f64()))
}

// ---------------------------------------------------------------- 2

fn knapsack_exactness() -> Outcome {
    let mut r = rng(2);
    let mut mismatches = 0;
    for _ in 0..500 {
        let q = r.gen_range(0..=16);
        let items: Vec<(u64, f64)> = (0..q).map(|_| (r.gen_range(0..=20), r.gen_range(0..=30) as f64)).collect();
        let cap = r.gen_range(0..=80);
        let (v, chosen) = knapsack_max(&items, cap);
        let weight: u64 = chosen.iter().map(|&i| items[i].0).sum();
        let value: f64 = chosen.iter().map(|&i| items[i].1).sum();
        if v != brute::knapsack(&items, cap) || weight > cap || value != v {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("500 cases up to 16 items, {mismatches} mismatches"))
}

// ---------------------------------------------------------------- 3

fn frt_domination() -> Outcome {
    let mut shrunk = 0usize;
    let mut worst = 0.0f64;
    let mut over = 0;
    for seed in 0..50u64 {
        let mut r = rng(300 + seed);
        let n = r.gen_range(2..=32);
        let m = brute::random_metric(&mut r, n);
        let dist = sample_distribution(&m, default_count(n), seed);
        for t in &dist.trees {
            for u in 0..n {
                for v in 0..n {
                    if t.distance(u, v) < m.d(u, v) {
                        shrunk += 1;
                    }
                }
            }
        }
        // mean over pairs of the averaged stretch, recomputed here
        let mut acc = 0.0;
        let mut pairs = 0;
        for u in 0..n {
            for v in u + 1..n {
                let e: f64 = dist.trees.iter().zip(&dist.weights).map(|(t, w)| w * t.distance(u, v)).sum();
                acc += e / m.d(u, v);
                pairs += 1;
            }
        }
        let mean = acc / pairs as f64;
        let bound = 16.0 * log2n(n);
        worst = worst.max(mean / bound);
        if mean > bound {
            over += 1;
        }
    }
    outcome(shrunk == 0 && over == 0, format!("50 metrics, {shrunk} shrunk pairs, {over} over 16 log2 n, largest mean/bound {worst:.3}"))
}

// ---------------------------------------------------------------- 4

fn npcst_general() -> Outcome {
    let start = Instant::now();
    let (mut low, mut cost_over, mut stretch_over, mut recount) = (0, 0, 0, 0);
    let mut worst = f64::INFINITY;
    for seed in 0..50u64 {
        let mut r = rng(400 + seed);
        let n = r.gen_range(2..=10);
        let m = brute::random_metric(&mut r, n);
        let clients: Vec<NpcstClient> = (0..r.gen_range(1..=5))
            .map(|_| NpcstClient {
                node: r.gen_range(0..n),
                profit: r.gen_range(1..=5) as f64,
                radius: r.gen_range(1..=4) as f64,
            })
            .collect();
        let inst = NpcstInstance {
            metric: &m,
            root: r.gen_range(0..n),
            clients,
            budget: r.gen_range(0..=12) as f64,
        };
        let cfg = GeneralConfig { seed, ..Default::default() };
        let s = solve_npcst_general(&inst, &cfg).unwrap();
        let opt = exact_npcst(&inst).unwrap();
        let cost: f64 = s.tree.edges.iter().map(|&(a, b)| m.d(a, b)).sum();
        let lg = log2n(n).max(1.0);
        let (cost_bound, stretch_bound) = (8.0 * cfg.a * lg * inst.budget, 16.0 * cfg.a * lg);
        // profit of clients whose ball, stretched by the bound, meets the tree
        let mut profit = 0.0;
        let mut stretch = 0.0f64;
        for c in &inst.clients {
            let d = s.tree.nodes.iter().map(|&u| m.d(c.node, u)).fold(f64::INFINITY, f64::min);
            if d <= stretch_bound * c.radius {
                profit += c.profit;
                if d > 0.0 {
                    stretch = stretch.max(d / c.radius);
                }
            }
        }
        low += (profit < opt / 2.0) as usize;
        cost_over += (cost > cost_bound) as usize;
        stretch_over += (stretch > stretch_bound) as usize;
        recount += (profit != s.profit) as usize;
        if opt > 0.0 {
            worst = worst.min(profit / opt);
        }
    }
    let t = start.elapsed();
    let pass = low + cost_over + stretch_over + recount == 0 && t < Duration::from_secs(120);
    outcome(
        pass,
        format!("50 instances, below OPT/2: {low}, cost over: {cost_over}, stretch over: {stretch_over}, profit mismatches: {recount}, worst profit/OPT {worst:.3}, {:.1}s (limit 120s)", t.as_secs_f64()),
    )
}

// ---------------------------------------------------------------- 5, 6, 8

/// Instance with integer distances, speeds 1 or 2 for repairmen, 0 or 1 for
/// clients, and no client on a depot.
fn sum_instance(seed: u64, n: usize) -> Instance {
    let mut r = rng(seed);
    let metric = brute::random_metric(&mut r, n);
    let k = r.gen_range(1..=2);
    let reps: Vec<(usize, f64)> = (0..k).map(|_| (r.gen_range(0..n), r.gen_range(1..=2) as f64)).collect();
    let free: Vec<usize> = (0..n).filter(|u| reps.iter().all(|d| d.0 != *u)).collect();
    let clients: Vec<(usize, f64)> = (0..r.gen_range(1..=3)).map(|_| (free[r.gen_range(0..free.len())], r.gen_range(0..=1) as f64)).collect();
    Instance::new(metric, &reps, &clients).unwrap()
}

fn small_budget() -> OracleBudget {
    OracleBudget {
        nodes: 5,
        clients: 3,
        repairmen: 2,
        ..Default::default()
    }
}

fn lp_discretization() -> Outcome {
    let mut over = 0;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let inst = sum_instance(500 + seed, 5);
        let (sc, factor) = scale_instance(&inst).unwrap();
        let grid = build_time_grid(&sc);
        let pricer = ExactPricer::new(&sc, &grid, 1.0, 14).unwrap();
        let cfg = LpConfig {
            mu: 1.0,
            omega: 1.0,
            epsilon: 0.0,
            max_rounds: 500,
        };
        let (frac, _) = solve_sum_mr_lp(&sc, &grid, &pricer, &cfg).unwrap();
        let lp = frac.objective / factor;
        let opt = exact_sum_mr(&inst, &small_budget()).unwrap().objective;
        if lp > 2.0 * opt {
            over += 1;
        }
        if opt > 0.0 {
            worst = worst.max(lp / opt);
        }
    }
    outcome(over == 0, format!("20 instances, {over} above 2 OPT, largest LP/OPT {worst:.3}"))
}

struct PipelineRun {
    report: SolutionReport,
    opt: f64,
}

fn pipeline_runs() -> Vec<PipelineRun> {
    (0..20)
        .map(|seed| {
            let inst = sum_instance(800 + seed, 5);
            let report = solve_sum_mr(&inst, &SumMrConfig { mra: mrsolve::summr::MraConfig { strict: false, ..Default::default() }, ..Default::default() }).unwrap();
            let opt = exact_sum_mr(&inst, &small_budget()).unwrap().objective;
            PipelineRun { report, opt }
        })
        .collect()
}

fn rounding_certificates(runs: &[PipelineRun]) -> Outcome {
    let (mut coverage, mut complete, mut total, mut decay) = (0, 0, 0, 0);
    let mut steps = 0;
    for run in runs {
        let rep = &run.report;
        for st in &rep.trace.steps {
            steps += 1;
            // tolerance only for the float sum behind the LP mass
            let need = (st.mass / (2.0 * rep.omega) - 1e-9).ceil().max(0.0) as usize;
            coverage += (st.served.len() < need) as usize;
        }
        let all_within = rep.trace.served_stamp.iter().all(|s| s.is_some()) && rep.trace.extra_rounds == 0;
        complete += (!all_within) as usize;
        total += (rep.indirect_total > 32.0 * rep.mu * rep.omega * rep.lp_objective) as usize;
        for d in &rep.trace.decay {
            let bound: f64 = (0..=d.stamp).map(|j| rep.trace.h[j] / 4f64.powi((d.stamp - j + 1) as i32)).sum();
            decay += (d.residual > bound + 1e-9) as usize;
        }
    }
    outcome(
        coverage + complete + total + decay == 0,
        format!("{} runs, {steps} rounds; failures: coverage {coverage}, unserved {complete}, total bound {total}, decay {decay}", runs.len()),
    )
}

fn end_to_end(runs: &[PipelineRun]) -> Outcome {
    let mut over = 0;
    let mut ratios = Vec::new();
    for run in runs {
        let rep = &run.report;
        let bound = 2.0 * (3.0 + rep.eps) * 32.0 * rep.mu * rep.omega;
        if run.opt > 0.0 {
            ratios.push(rep.total / run.opt);
        }
        if rep.total > bound * run.opt {
            over += 1;
        }
    }
    ratios.sort_by(f64::total_cmp);
    let q = |p: f64| ratios.get(((ratios.len() as f64 - 1.0) * p).round() as usize).copied().unwrap_or(f64::NAN);
    outcome(
        over == 0,
        format!("{} instances, {over} above the composed bound 256; ratio min {:.2}, median {:.2}, max {:.2}", runs.len(), q(0.0), q(0.5), q(1.0)),
    )
}

// ---------------------------------------------------------------- 7

fn random_schedule(seed: u64) -> (Instance, Schedule) {
    let mut r = rng(seed);
    let n = r.gen_range(3..=7);
    let metric = brute::random_metric(&mut r, n);
    let reps: Vec<(usize, f64)> = (0..r.gen_range(1..=3)).map(|_| (r.gen_range(0..n), r.gen_range(1..=3) as f64)).collect();
    let clients: Vec<(usize, f64)> = (0..r.gen_range(1..=6)).map(|_| (r.gen_range(0..n), r.gen_range(1..=4) as f64 / 2.0)).collect();
    let inst = Instance::new(metric, &reps, &clients).unwrap();
    let walks = inst
        .repairmen
        .iter()
        .map(|rep| {
            let mut w = TimedWalk {
                owner: rep.id,
                nodes: vec![rep.depot],
                times: vec![0.0],
            };
            let (mut t, mut at) = (0.0, rep.depot);
            for _ in 0..r.gen_range(0..6) {
                let next = r.gen_range(0..n);
                t += inst.metric.d(at, next) / rep.speed;
                if r.gen_bool(0.3) {
                    t += r.gen_range(0..5) as f64;
                }
                w.push(next, t);
                at = next;
            }
            w
        })
        .collect();
    let m = inst.clients.len();
    (inst, Schedule { walks, assignments: vec![None; m] })
}

fn perfect_transform() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for eps in [0.5, 1.0, 2.0] {
        let (mut over, mut fake, mut clients) = (0, 0, 0);
        let mut worst = 0.0f64;
        for seed in 0..100 {
            let (inst, sched) = random_schedule(700 + seed);
            let (perfect, _) = to_perfect(&inst, &sched, eps).unwrap();
            for c in 0..inst.clients.len() {
                clients += 1;
                let ind = brute::indirect_latency(&inst, &sched, c);
                let Some(a) = perfect.assignments[c] else {
                    fake += 1;
                    continue;
                };
                // the meeting happens: repairman present, client arrived
                if !brute::repairman_at(&perfect, a.node, a.time) || brute::reach(&inst, c, a.node) > a.time {
                    fake += 1;
                }
                let ratio = if ind > 0.0 { a.time / ind } else if a.time == 0.0 { 1.0 } else { f64::INFINITY };
                worst = worst.max(ratio);
                if a.time > (3.0 + eps) * ind {
                    over += 1;
                }
            }
        }
        pass &= over == 0 && fake == 0;
        parts.push(format!("eps {eps}: {over}/{clients} clients over {:.1}x, worst {worst:.2}x, {fake} invalid meetings", 3.0 + eps));
    }
    outcome(pass, parts.join("; "))
}

// ---------------------------------------------------------------- 9

fn planar_instance(seed: u64) -> (Vec<(f64, f64)>, Vec<NpcstClient>, usize, f64) {
    let mut r = rng(seed);
    let n = r.gen_range(3..=10);
    let w = r.gen_range(2.0..12.0);
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (r.gen_range(0.0..w), r.gen_range(0.0..w))).collect();
    let base = r.gen_range(0.3..1.0);
    let cl = (0..r.gen_range(1..=5))
        .map(|_| NpcstClient {
            node: r.gen_range(0..n),
            profit: r.gen_range(1..=5) as f64,
            radius: base * r.gen_range(1.0..2.0),
        })
        .collect();
    (pts, cl, r.gen_range(0..n), r.gen_range(0.0..w))
}

fn euclidean_npcst() -> Outcome {
    let start = Instant::now();
    // tiling: every point sits in the hexagon of its tile, equal colors are
    // at least three tile steps apart
    let (mut misplaced, mut clashes, mut patches) = (0, 0, 0);
    for seed in 0..200u64 {
        let mut r = rng(900 + seed);
        let side = r.gen_range(0.5..3.0);
        let pts: Vec<(f64, f64)> = (0..r.gen_range(1..=40)).map(|_| (r.gen_range(-20.0..20.0), r.gen_range(-20.0..20.0))).collect();
        let (grid, tiles): (HexGrid, _) = build_hex_tiling(&pts, side, 0).unwrap();
        for (p, &t) in pts.iter().zip(&tiles) {
            if !brute::in_polygon(&grid.corners(t), *p, 1e-9 * side * side) {
                misplaced += 1;
            }
        }
        let mut occupied = tiles.clone();
        occupied.sort_unstable();
        occupied.dedup();
        let colors = color_tiles(&occupied);
        patches += 1;
        for (&a, &ca) in &colors {
            for (&b, &cb) in &colors {
                if a < b && ca == cb && brute::hex_steps(a, b) < 3 {
                    clashes += 1;
                }
            }
            if !(1..=7).contains(&ca) {
                clashes += 1;
            }
        }
    }
    let eps = 1.0;
    let (mut heavy, mut far, mut low, mut solved) = (0, 0, 0, 0);
    let mut worst = f64::INFINITY;
    for seed in 0..40u64 {
        let (pts, clients, root, budget) = planar_instance(1000 + seed);
        let m = MetricSpace::euclidean(&pts);
        let inst = NpcstInstance {
            metric: &m,
            root,
            clients,
            budget,
        };
        let cfg = EuclidConfig { eps, subsolver: BpcstSubsolver::Exact };
        let s = solve_npcsta(&inst, &pts, &cfg).unwrap();
        if s.aux.tiles.len() > 12 {
            continue;
        }
        solved += 1;
        let weight: f64 = s.solution.tree.edges.iter().map(|&(a, b)| m.d(a, b)).sum();
        heavy += (weight > 35.0 * budget) as usize;
        let lo = inst.clients.iter().map(|c| c.radius).fold(f64::INFINITY, f64::min);
        let hi = inst.clients.iter().map(|c| c.radius).fold(0.0, f64::max);
        let p = hi / lo;
        for &c in &s.served {
            let cl = &inst.clients[c];
            let d = s.solution.tree.nodes.iter().map(|&u| m.d(cl.node, u)).fold(f64::INFINITY, f64::min);
            far += (d > (4.0 * p + 1.0) * cl.radius + 1e-9) as usize;
        }
        let served: f64 = s.served.iter().map(|&c| inst.clients[c].profit).sum();
        let opt = exact_npcst(&inst).unwrap();
        low += (served < opt / (12.0 + eps)) as usize;
        if opt > 0.0 {
            worst = worst.min(served / opt);
        }
    }
    let t = start.elapsed();
    let pass = misplaced + clashes + heavy + far + low == 0 && solved > 0 && t < Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "{patches} patches: {misplaced} misplaced points, {clashes} color clashes; {solved} instances: {heavy} over 35L, {far} served too far, {low} below OPT/(12+eps), worst served/OPT {worst:.3}; {:.1}s (limit 120s)",
            t.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 10

fn equal_speed_instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let n = r.gen_range(3..=6);
    let metric = brute::random_metric(&mut r, n);
    let reps: Vec<(usize, f64)> = (0..r.gen_range(1..=2)).map(|_| (r.gen_range(0..n), 1.0)).collect();
    let cl: Vec<(usize, f64)> = (0..r.gen_range(1..=4)).map(|_| (r.gen_range(0..n), r.gen_range(0..=2) as f64 / 2.0)).collect();
    Instance::new(metric, &reps, &cl).unwrap()
}

fn max_mr() -> Outcome {
    let eps = 0.1;
    let budget = OracleBudget {
        nodes: 6,
        clients: 4,
        repairmen: 2,
        ..Default::default()
    };
    let (mut sep, mut slave, mut latency, mut bound) = (0, 0, 0, 0);
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let inst = equal_speed_instance(1100 + seed);
        let rep = solve_max_mr(&inst, eps).unwrap();
        if let Some(tg) = &rep.tagging {
            for (i, &a) in tg.leaders.iter().enumerate() {
                for &b in &tg.leaders[i + 1..] {
                    let d = tg.balls[a].iter().flat_map(|&u| tg.balls[b].iter().map(move |&v| (u, v))).map(|(u, v)| inst.metric.d(u, v)).fold(f64::INFINITY, f64::min);
                    sep += (d < 8.0 * tg.radius[a].max(tg.radius[b])) as usize;
                }
            }
            for c in 0..inst.clients.len() {
                let l = tg.leader_of[c];
                let cl = inst.clients[c];
                let meets = tg.balls[l].iter().any(|&u| u == cl.start || inst.metric.d(cl.start, u) <= cl.speed * 9.0 * tg.t);
                slave += (!meets) as usize;
            }
        }
        bound += (rep.max_latency > 10.0 * rep.t_star) as usize;
        let opt = exact_max_mr(&inst, &budget).unwrap().objective;
        latency += (rep.max_latency > 10.0 * (1.0 + eps) * opt) as usize;
        if opt > 0.0 {
            worst = worst.max(rep.max_latency / opt);
        }
    }
    let mut cover_over = 0;
    let mut cover_worst = 0.0f64;
    for seed in 0..40u64 {
        let mut r = rng(1200 + seed);
        let n = r.gen_range(4..=9);
        let m = brute::random_metric(&mut r, n);
        let roots: Vec<usize> = (0..r.gen_range(1..=3)).map(|_| r.gen_range(0..n)).collect();
        let terms: Vec<usize> = (0..r.gen_range(1..=8)).map(|_| r.gen_range(0..n)).collect();
        let opt = exact_minmax_cover(&m, &roots, &terms).unwrap();
        let c = minmax_k_tree_cover(&m, &roots, &terms).unwrap();
        cover_over += (c.max_length > 4.0 * opt) as usize;
        if opt > 0.0 {
            cover_worst = cover_worst.max(c.max_length / opt);
        }
    }
    let mixed = Instance::new(MetricSpace::from_fn(2, |u, v| (u != v) as u8 as f64), &[(0, 1.0), (1, 2.0)], &[(1, 0.0)]).unwrap();
    let rejected = matches!(solve_max_mr(&mixed, eps), Err(mrsolve::Error::Invalid(_)));
    outcome(
        sep + slave + latency + bound + cover_over == 0 && rejected,
        format!(
            "50 runs: separation {sep}, slave {slave}, over 10 T* {bound}, over 10(1+eps) OPT {latency} (worst {worst:.2}x); 40 covers: {cover_over} over 4 OPT (worst {cover_worst:.2}x); unequal speeds rejected: {rejected}"
        ),
    )
}

// ---------------------------------------------------------------- 11

fn run_bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mrsolve")).args(args).output().expect("binary runs")
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).display().to_string();
    let mut problems = Vec::new();
    let gen = |kind: &str, file: &str, extra: &[&str]| {
        let mut args = vec!["gen", "--kind", kind, "--seed", "5", "--out"];
        let out = p(file);
        args.push(&out);
        args.extend_from_slice(extra);
        run_bin(&args);
    };
    gen("random-metric", "metric.inst", &["--nodes", "5", "--repairmen", "2", "--clients", "3", "--npcst"]);
    gen("random-metric", "equal.inst", &["--nodes", "5", "--repairmen", "2", "--clients", "3", "--equal-speeds"]);
    gen("euclidean-uniform", "plane.inst", &["--nodes", "8", "--clients", "4", "--npcst"]);
    gen("locker", "locker.inst", &["--nodes", "9", "--clients", "4", "--npcst", "--equal-speeds"]);

    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("metric.inst", vec!["solve-sum"]),
        ("metric.inst", vec!["solve-sum", "--mode", "oracle", "--frt-count", "4", "--max-rounds", "40"]),
        ("metric.inst", vec!["solve-sum", "--randomized"]),
        ("equal.inst", vec!["solve-max"]),
        ("locker.inst", vec!["solve-max"]),
        ("metric.inst", vec!["npcst"]),
        ("plane.inst", vec!["npcst-euclid"]),
        ("locker.inst", vec!["npcst-euclid", "--subsolver", "greedy"]),
        ("metric.inst", vec!["embed"]),
        ("metric.inst", vec!["oracle", "--problem", "sum"]),
        ("equal.inst", vec!["oracle", "--problem", "max"]),
        ("metric.inst", vec!["oracle", "--problem", "npcst"]),
    ];
    let mut files = 0;
    for (i, (inst, args)) in runs.iter().enumerate() {
        let inst_path = p(inst);
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = p(&format!("run{i}_{rep}.res"));
            let mut a: Vec<&str> = args.clone();
            a.extend_from_slice(&["--seed", "7", "--instance", &inst_path, "--out", &out]);
            let o = run_bin(&a);
            if !o.status.success() {
                problems.push(format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr).trim()));
            }
            outputs.push(std::fs::read(&out).unwrap_or_default());
            let v = run_bin(&["verify", "--instance", &inst_path, "--result", &out]);
            if !v.status.success() {
                problems.push(format!("verify {args:?}: {}", String::from_utf8_lossy(&v.stderr).trim()));
            }
            files += 1;
        }
        if outputs[0] != outputs[1] {
            problems.push(format!("{args:?} differs between runs"));
        }
        if ResultFile::from_text(&String::from_utf8_lossy(&outputs[0])).is_err() {
            problems.push(format!("{args:?} wrote no result file"));
        }
    }
    for extra in [&["bench", "--problem", "max", "--seeds", "4", "--nodes", "4"][..], &["gen", "--kind", "locker", "--seed", "3", "--npcst"][..]] {
        if run_bin(extra).stdout != run_bin(extra).stdout {
            problems.push(format!("{extra:?} differs between runs"));
        }
    }
    let gens = ["metric.inst", "equal.inst", "plane.inst", "locker.inst"];
    if !gens.iter().all(|g| Path::new(&p(g)).exists()) {
        problems.push("gen wrote no file".into());
    }
    outcome(problems.is_empty(), if problems.is_empty() { format!("{} commands twice each, {files} result files verified", runs.len() + 2) } else { problems.join("; ") })
}

fn main() {
    let start = Instant::now();
    type Criterion<'a> = (&'a str, Box<dyn FnMut() -> Outcome + 'a>);
    let shared = std::cell::RefCell::new(None::<Vec<PipelineRun>>);
    let with_runs = |f: fn(&[PipelineRun]) -> Outcome| {
        let shared = &shared;
        move || {
            let mut s = shared.borrow_mut();
            f(s.get_or_insert_with(pipeline_runs))
        }
    };
    let criteria: Vec<Criterion> = vec![
        ("STSCST DP exactness", Box::new(stscst_exactness)),
        ("knapsack exactness", Box::new(knapsack_exactness)),
        ("FRT domination and distortion", Box::new(frt_domination)),
        ("tri-criteria NPCST", Box::new(npcst_general)),
        ("LP discretization", Box::new(lp_discretization)),
        ("rounding certificates", Box::new(with_runs(rounding_certificates))),
        ("indirect to perfect service", Box::new(perfect_transform)),
        ("end-to-end Sum-MR ratio", Box::new(with_runs(end_to_end))),
        ("Euclidean NPCST", Box::new(euclidean_npcst)),
        ("Max-MR", Box::new(max_mr)),
        ("determinism and verify", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, mut f)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(&mut f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += (!o.pass) as usize;
        println!("criterion {:>2} {} {name}: {} [{:.1}s]", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of 11 criteria pass ({:.1}s)", 11 - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
