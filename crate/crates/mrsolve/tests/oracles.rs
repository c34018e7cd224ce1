mod common;

use mrsolve::graph::mst_weight;
use mrsolve::model::{evaluate_indirect, Instance};
use mrsolve::npcst::euclid::{solve_bpcst, BpcstSubsolver};
use mrsolve::npcst::NpcstInstance;
use mrsolve::oracles::{exact_bpcst, exact_max_mr_over, exact_minmax_cover, exact_npcst, exact_npcst_by_node_sets, exact_sum_mr, exact_sum_mr_over, OracleBudget, Walks};
use rand::Rng;

fn tiny(seed: u64) -> Instance {
    let mut r = common::rng(seed);
    let n = r.gen_range(2..=4);
    let metric = common::random_metric(&mut r, n);
    let reps: Vec<(usize, f64)> = (0..r.gen_range(1..=2)).map(|_| (r.gen_range(0..n), r.gen_range(1..=2) as f64)).collect();
    let cl: Vec<(usize, f64)> = (0..r.gen_range(1..=3)).map(|_| (r.gen_range(0..n), r.gen_range(0..=2) as f64 / 2.0)).collect();
    Instance::new(metric, &reps, &cl).unwrap()
}

/// Simple visit sequences suffice: allowing revisits never lowers either
/// optimum on small instances.
#[test]
fn revisits_never_help() {
    let budget = OracleBudget {
        walk_len: 6,
        ..Default::default()
    };
    for seed in 0..60 {
        let inst = tiny(seed);
        let n = inst.n();
        let budget = OracleBudget {
            walk_len: (n + 2).min(budget.walk_len),
            ..budget.clone()
        };
        let s = exact_sum_mr_over(&inst, &budget, Walks::Simple).unwrap().objective;
        let s2 = exact_sum_mr_over(&inst, &budget, Walks::Revisits).unwrap().objective;
        assert!((s - s2).abs() < 1e-9, "seed {seed}: {s} vs {s2}");
        let m = exact_max_mr_over(&inst, &budget, Walks::Simple).unwrap().objective;
        let m2 = exact_max_mr_over(&inst, &budget, Walks::Revisits).unwrap().objective;
        assert!((m - m2).abs() < 1e-9, "seed {seed}: {m} vs {m2}");
    }
}

#[test]
fn witnesses_reevaluate() {
    for seed in 0..40 {
        let inst = tiny(100 + seed);
        let ex = exact_sum_mr(&inst, &OracleBudget::default()).unwrap();
        let ev = evaluate_indirect(&inst, &ex.schedule).unwrap();
        assert!((ev.total - ex.objective).abs() < 1e-9);
        assert_eq!(ev.latencies, ex.latencies);
    }
}

#[test]
fn npcst_oracles_agree() {
    for seed in 0..40 {
        let mut r = common::rng(seed);
        let n = r.gen_range(2..=7);
        let m = common::random_metric(&mut r, n);
        let k = r.gen_range(1..=4);
        let inst = NpcstInstance {
            metric: &m,
            root: r.gen_range(0..n),
            clients: common::random_clients(&mut r, n, k),
            budget: r.gen_range(0..=12) as f64,
        };
        let a = exact_npcst(&inst).unwrap();
        let b = exact_npcst_by_node_sets(&inst).unwrap();
        assert_eq!(a, b, "seed {seed}");
    }
}

/// Min-max cover by assigning terminals to roots and spanning each share
/// with the cheapest superset of nodes.
fn cover_by_assignment(m: &mrsolve::model::MetricSpace, roots: &[usize], terms: &[usize]) -> f64 {
    let n = m.n();
    let steiner = |need: u32| -> f64 {
        (0u32..(1 << n))
            .filter(|s| s & need == need)
            .map(|s| {
                let nodes: Vec<usize> = (0..n).filter(|&u| s >> u & 1 == 1).collect();
                mst_weight(&nodes, |u, v| m.d(u, v))
            })
            .fold(f64::INFINITY, f64::min)
    };
    let k = roots.len();
    let mut best = f64::INFINITY;
    for code in 0..k.pow(terms.len() as u32) {
        let mut need: Vec<u32> = roots.iter().map(|&r| 1 << r).collect();
        let mut c = code;
        for &t in terms {
            need[c % k] |= 1 << t;
            c /= k;
        }
        best = best.min(need.iter().map(|&s| steiner(s)).fold(0.0, f64::max));
    }
    best
}

#[test]
fn cover_oracle_against_assignment_scan() {
    for seed in 0..30 {
        let mut r = common::rng(40 + seed);
        let n = r.gen_range(2..=6);
        let m = common::random_metric(&mut r, n);
        let roots: Vec<usize> = (0..r.gen_range(1..=2)).map(|_| r.gen_range(0..n)).collect();
        let terms: Vec<usize> = (0..r.gen_range(0..=4)).map(|_| r.gen_range(0..n)).collect();
        let a = exact_minmax_cover(&m, &roots, &terms).unwrap();
        let b = cover_by_assignment(&m, &roots, &terms);
        assert!((a - b).abs() < 1e-9, "seed {seed}: {a} vs {b}");
    }
    let m = common::random_metric(&mut common::rng(1), 4);
    assert_eq!(exact_minmax_cover(&m, &[0, 2], &[0, 2]).unwrap(), 0.0);
    assert_eq!(exact_minmax_cover(&m, &[0, 2], &[3]).unwrap(), m.d(0, 3).min(m.d(2, 3)));
}

#[test]
fn bpcst_oracle_against_branch_and_bound() {
    for seed in 0..40 {
        let mut r = common::rng(70 + seed);
        let n = r.gen_range(1..=9);
        let m = common::random_metric(&mut r, n);
        let nodes: Vec<usize> = (0..n).collect();
        let profits: Vec<f64> = (0..n).map(|_| r.gen_range(0..=5) as f64).collect();
        let root = r.gen_range(0..n);
        let budget = r.gen_range(0..=15) as f64;
        let (p, _) = exact_bpcst(&m, &nodes, &profits, root, budget).unwrap();
        let t = solve_bpcst(&m, &nodes, &profits, root, budget, BpcstSubsolver::Exact).unwrap();
        let q: f64 = t.nodes.iter().map(|&u| profits[u]).sum();
        assert_eq!(p, q, "seed {seed}");
        assert!(t.cost <= budget + 1e-9);
        // distinct nodes are at least 1 apart
        assert_eq!(exact_bpcst(&m, &nodes, &profits, root, 0.0).unwrap().0, profits[root]);
        let all = mst_weight(&nodes, |u, v| m.d(u, v));
        assert_eq!(exact_bpcst(&m, &nodes, &profits, root, all).unwrap().0, profits.iter().sum::<f64>());
    }
}
