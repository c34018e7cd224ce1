//! Exhaustive reference computations, written without the library's solvers.

use mrsolve::graph::ShortestPaths;
use mrsolve::model::{Instance, MetricSpace, Schedule};
use mrsolve::treedp::{RootedTree, TreeClient};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Closure of a random connected graph with integer weights in 1..=9.
pub fn random_metric(r: &mut ChaCha8Rng, n: usize) -> MetricSpace {
    let mut w = vec![vec![f64::INFINITY; n]; n];
    for (u, row) in w.iter_mut().enumerate() {
        row[u] = 0.0;
    }
    for u in 0..n {
        for v in u + 1..n {
            if v == u + 1 || r.gen_bool(0.5) {
                let x = r.gen_range(1..=9) as f64;
                w[u][v] = x;
                w[v][u] = x;
            }
        }
    }
    let sp = ShortestPaths::new(n, |u, v| w[u][v]);
    MetricSpace::from_fn(n, |u, v| sp.d(u, v))
}

/// All-pairs distances of a rooted tree by relaxing its parent edges.
pub fn tree_distances(t: &RootedTree) -> Vec<Vec<f64>> {
    let n = t.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0.0;
    }
    for v in 0..n {
        if let Some(p) = t.parent[v] {
            d[v][p] = t.length[v];
            d[p][v] = t.length[v];
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Scaled service cost: free on the tree, else `floor(p d / (r x))`.
pub fn scaled_service(c: &TreeClient, d: f64, x: f64) -> Option<f64> {
    if d == 0.0 {
        Some(0.0)
    } else if x == 0.0 {
        None
    } else {
        Some((c.profit * d / (c.radius * x) + 1e-9).floor())
    }
}

/// Best profit over connected root subtrees of cost at most `b` and client
/// subsets whose scaled service cost is at most `s`.
pub fn stscst(t: &RootedTree, clients: &[TreeClient], b: u64, s: f64, x: f64) -> f64 {
    let n = t.len();
    let d = tree_distances(t);
    let mut best = 0.0f64;
    for mask in (1u32..(1 << n)).filter(|m| m & 1 == 1) {
        let nodes: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        let connected = nodes.iter().all(|&v| v == 0 || t.parent[v].is_some_and(|p| mask >> p & 1 == 1));
        let cost: u64 = nodes.iter().filter(|&&v| v != 0).map(|&v| t.cost[v]).sum();
        if !connected || cost > b {
            continue;
        }
        let costs: Vec<Option<f64>> = clients
            .iter()
            .map(|c| scaled_service(c, nodes.iter().map(|&h| d[c.node][h]).fold(f64::INFINITY, f64::min), x))
            .collect();
        for sub in 0u32..(1 << clients.len()) {
            let (mut total, mut profit, mut ok) = (0.0, 0.0, true);
            for (i, c) in clients.iter().enumerate() {
                if sub >> i & 1 == 1 {
                    match costs[i] {
                        Some(x) => total += x,
                        None => ok = false,
                    }
                    profit += c.profit;
                }
            }
            if ok && total <= s {
                best = best.max(profit);
            }
        }
    }
    best
}

/// Subset-sum scan; subset sums built from the subset without its lowest item.
pub fn knapsack(items: &[(u64, f64)], cap: u64) -> f64 {
    let q = items.len();
    let mut w = vec![0u64; 1 << q];
    let mut v = vec![0f64; 1 << q];
    let mut best = 0.0f64;
    for mask in 1usize..(1 << q) {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        w[mask] = w[rest] + items[low].0;
        v[mask] = v[rest] + items[low].1;
        if w[mask] <= cap {
            best = best.max(v[mask]);
        }
    }
    best
}

/// Time client `c` needs to reach `u`.
pub fn reach(inst: &Instance, c: usize, u: usize) -> f64 {
    let cl = &inst.clients[c];
    let d = inst.metric.d(cl.start, u);
    if u == cl.start || d == 0.0 {
        0.0
    } else if cl.speed == 0.0 {
        f64::INFINITY
    } else {
        d / cl.speed
    }
}

/// Indirect latency: the best visit, waiting for the client if it is late.
pub fn indirect_latency(inst: &Instance, s: &Schedule, c: usize) -> f64 {
    s.walks
        .iter()
        .flat_map(|w| w.nodes.iter().zip(&w.times))
        .map(|(&u, &t)| t.max(reach(inst, c, u)))
        .fold(f64::INFINITY, f64::min)
}

/// Whether some walk has its repairman at `u` at time `t`: either a recorded
/// visit at exactly `t` or a wait at `u` spanning `t`.
pub fn repairman_at(s: &Schedule, u: usize, t: f64) -> bool {
    s.walks.iter().any(|w| {
        (0..w.nodes.len()).any(|i| {
            w.nodes[i] == u && (w.times[i] == t || (i + 1 < w.nodes.len() && w.nodes[i + 1] == u && w.times[i] <= t && t <= w.times[i + 1]))
        })
    })
}

/// Axial hex distance.
pub fn hex_steps(a: (i64, i64), b: (i64, i64)) -> i64 {
    let (dq, dr) = (a.0 - b.0, a.1 - b.1);
    (dq.abs() + dr.abs() + (dq + dr).abs()) / 2
}

/// Even-odd ray casting with boundary points counted as inside.
pub fn in_polygon(corners: &[(f64, f64)], p: (f64, f64), tol: f64) -> bool {
    let k = corners.len();
    let mut inside = false;
    for i in 0..k {
        let (a, b) = (corners[i], corners[(i + 1) % k]);
        let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        if cross.abs() <= tol && (p.0 - a.0) * (p.0 - b.0) <= tol && (p.1 - a.1) * (p.1 - b.1) <= tol {
            return true;
        }
        if (a.1 > p.1) != (b.1 > p.1) && p.0 < (b.0 - a.0) * (p.1 - a.1) / (b.1 - a.1) + a.0 {
            inside = !inside;
        }
    }
    inside
}
