//! Max-MR for repairmen sharing one speed.
//!
//! For a guess `T` every client gets the ball of radius `v'_c T`. Clients
//! are tagged leader or slave by increasing radius, leader balls are
//! contracted to single nodes, a rooted min-max tree cover over the
//! contracted metric is doubled into walks, and the walks are stitched back
//! together inside the balls. `T` is accepted when every walk has length at
//! most `10 v T`; a binary search finds the smallest accepted `T` up to a
//! factor `1 + eps`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invariant, Error, Result};
use crate::graph::{euler_walk, mst_edges, walk_length, ShortestPaths};
use crate::model::{ball, evaluate_indirect, Evaluation, Instance, MetricSpace, Schedule, TimedWalk};
use crate::num::{approx_eq, leq, tol};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterTagging {
    pub t: f64,
    /// Leader clients in the order they were tagged.
    pub leaders: Vec<usize>,
    /// Leader of every client; leaders map to themselves.
    pub leader_of: Vec<usize>,
    pub radius: Vec<f64>,
    pub balls: Vec<Vec<usize>>,
}

impl ClusterTagging {
    pub fn is_leader(&self, c: usize) -> bool {
        self.leader_of[c] == c
    }
}

fn set_distance(metric: &MetricSpace, a: &[usize], b: &[usize]) -> f64 {
    a.iter()
        .flat_map(|&u| b.iter().map(move |&w| (u, w)))
        .map(|(u, w)| metric.d(u, w))
        .fold(f64::INFINITY, f64::min)
}

pub fn cluster_neighborhoods(inst: &Instance, t: f64) -> Result<ClusterTagging> {
    if !(t > 0.0) {
        return Err(Error::Invalid(format!("T must be positive, got {t}")));
    }
    let m = inst.clients.len();
    let radius: Vec<f64> = inst.clients.iter().map(|c| c.speed * t).collect();
    let balls: Vec<Vec<usize>> = (0..m).map(|c| ball(inst, c, t)).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| radius[a].total_cmp(&radius[b]).then(a.cmp(&b)));
    let mut leader_of = vec![usize::MAX; m];
    let mut leaders = Vec::new();
    for &c in &order {
        if leader_of[c] != usize::MAX {
            continue;
        }
        leader_of[c] = c;
        leaders.push(c);
        for &o in &order {
            if leader_of[o] == usize::MAX && balls[c].iter().any(|&u| inst.in_ball(o, 9.0 * t, u)) {
                leader_of[o] = c;
            }
        }
    }
    for (i, &a) in leaders.iter().enumerate() {
        for &b in &leaders[i + 1..] {
            let d = set_distance(&inst.metric, &balls[a], &balls[b]);
            let need = 8.0 * radius[a].max(radius[b]);
            if !leq(need, d) {
                return Err(invariant(
                    "leader-separation",
                    format!("leader balls of {a} and {b} are {d} apart, need {need}"),
                ));
            }
        }
    }
    for c in 0..m {
        let l = leader_of[c];
        if radius[c] + tol(radius[c]) < radius[l] || !balls[l].iter().any(|&u| inst.in_ball(c, 9.0 * t, u)) {
            return Err(invariant("slave-ball", format!("client {c} does not meet its leader {l}")));
        }
    }
    Ok(ClusterTagging {
        t,
        leaders,
        leader_of,
        radius,
        balls,
    })
}

/// The metric with every leader ball collapsed to one node. Contracted
/// nodes `0..leaders` are the balls in tagging order, the rest are the
/// original nodes outside every ball.
#[derive(Clone, Debug)]
pub struct Contraction {
    pub metric: MetricSpace,
    /// Contracted node of each original node.
    pub node_of: Vec<usize>,
    pub members: Vec<Vec<usize>>,
    /// Ball radius per contracted node, 0 for plain nodes.
    pub radius: Vec<f64>,
    /// Closest original pair realizing each direct contracted distance.
    witness: Vec<Vec<(usize, usize)>>,
    paths: ShortestPaths,
}

impl Contraction {
    /// Original node pairs of the hops realizing contracted edge `(a, b)`.
    pub fn hops(&self, a: usize, b: usize) -> Vec<(usize, usize)> {
        self.paths.path(a, b).windows(2).map(|w| self.witness[w[0]][w[1]]).collect()
    }
}

pub fn contract_leaders(metric: &MetricSpace, tagging: &ClusterTagging) -> Contraction {
    let n = metric.n();
    let mut node_of = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut radius = Vec::new();
    for &l in &tagging.leaders {
        let id = members.len();
        for &u in &tagging.balls[l] {
            node_of[u] = id;
        }
        members.push(tagging.balls[l].clone());
        radius.push(tagging.radius[l]);
    }
    for u in 0..n {
        if node_of[u] == usize::MAX {
            node_of[u] = members.len();
            members.push(vec![u]);
            radius.push(0.0);
        }
    }
    let k = members.len();
    let mut direct = vec![vec![0.0; k]; k];
    let mut witness = vec![vec![(0, 0); k]; k];
    for a in 0..k {
        for b in 0..k {
            let mut best = (f64::INFINITY, (members[a][0], members[b][0]));
            if a != b {
                for &u in &members[a] {
                    for &w in &members[b] {
                        if metric.d(u, w) < best.0 {
                            best = (metric.d(u, w), (u, w));
                        }
                    }
                }
                direct[a][b] = best.0;
            }
            witness[a][b] = best.1;
        }
    }
    let paths = ShortestPaths::new(k, |a, b| direct[a][b]);
    Contraction {
        metric: MetricSpace::from_fn(k, |a, b| paths.d(a, b)),
        node_of,
        members,
        radius,
        witness,
        paths,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverTree {
    pub root: usize,
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeCover {
    /// One tree per root, in root order.
    pub trees: Vec<CoverTree>,
    pub max_length: f64,
}

/// Terminals handled by the exhaustive partition.
pub const EXACT_COVER_TERMINALS: usize = 8;

fn tree_over(metric: &MetricSpace, root: usize, nodes: &BTreeSet<usize>) -> CoverTree {
    let mut list = vec![root];
    list.extend(nodes.iter().copied().filter(|&u| u != root));
    let edges = mst_edges(&list, |u, v| metric.d(u, v));
    let length = edges.iter().map(|&(u, v)| metric.d(u, v)).sum();
    list.sort_unstable();
    CoverTree {
        root,
        nodes: list,
        edges,
        length,
    }
}

fn finish(metric: &MetricSpace, roots: &[usize], sets: Vec<BTreeSet<usize>>) -> TreeCover {
    let trees: Vec<CoverTree> = roots.iter().zip(&sets).map(|(&r, s)| tree_over(metric, r, s)).collect();
    let max_length = trees.iter().map(|t| t.length).fold(0.0, f64::max);
    TreeCover { trees, max_length }
}

struct Piece {
    nodes: BTreeSet<usize>,
    weight: f64,
}

/// One guess `b`: a spanning tree of the terminals with all roots merged,
/// cut bottom-up into pieces of weight at least `b`, and pieces handed to
/// roots greedily.
fn cover_for_guess(metric: &MetricSpace, roots: &[usize], terms: &[usize], b: f64) -> TreeCover {
    let k = roots.len();
    // index 0 is the merged root
    let near = |t: usize| (0..k).min_by(|&i, &j| metric.d(roots[i], t).total_cmp(&metric.d(roots[j], t)).then(i.cmp(&j))).unwrap();
    let dd = |i: usize, j: usize| -> f64 {
        match (i, j) {
            (0, 0) => 0.0,
            (0, x) | (x, 0) => metric.d(roots[near(terms[x - 1])], terms[x - 1]),
            (x, y) => metric.d(terms[x - 1], terms[y - 1]),
        }
    };
    let ids: Vec<usize> = (0..=terms.len()).collect();
    let edges = mst_edges(&ids, dd);
    let mut children = vec![Vec::new(); ids.len()];
    let mut adj = vec![Vec::new(); ids.len()];
    for &(u, v) in &edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut order = vec![0];
    let mut seen = vec![false; ids.len()];
    seen[0] = true;
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                children[u].push(v);
                order.push(v);
            }
        }
        i += 1;
    }
    let mut pieces: Vec<Piece> = Vec::new();
    let mut rest: Vec<Option<Piece>> = (0..ids.len()).map(|_| None).collect();
    let mut base: Vec<Piece> = (0..k)
        .map(|r| Piece {
            nodes: BTreeSet::from([roots[r]]),
            weight: 0.0,
        })
        .collect();
    for &u in order.iter().rev() {
        if u == 0 {
            continue;
        }
        let mut contrib: Vec<Piece> = children[u]
            .iter()
            .map(|&c| {
                let p = rest[c].take().expect("children first");
                Piece {
                    weight: p.weight + dd(u, c),
                    nodes: p.nodes,
                }
            })
            .collect();
        contrib.sort_by(|a, b| a.weight.total_cmp(&b.weight));
        let mut bundle = Piece {
            nodes: BTreeSet::from([terms[u - 1]]),
            weight: 0.0,
        };
        for p in contrib {
            bundle.weight += p.weight;
            bundle.nodes.extend(p.nodes);
            if bundle.weight >= b && b > 0.0 {
                pieces.push(std::mem::replace(
                    &mut bundle,
                    Piece {
                        nodes: BTreeSet::from([terms[u - 1]]),
                        weight: 0.0,
                    },
                ));
            }
        }
        rest[u] = Some(bundle);
    }
    for &c in &children[0] {
        let p = rest[c].take().expect("children first");
        let r = near(terms[c - 1]);
        let w = p.weight + dd(0, c);
        let slot = &mut base[r];
        if slot.weight + w >= b && b > 0.0 && slot.weight > 0.0 {
            let mut nodes = p.nodes;
            nodes.insert(roots[r]);
            pieces.push(Piece { nodes, weight: w });
        } else {
            slot.weight += w;
            slot.nodes.extend(p.nodes);
        }
    }
    pieces.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    let mut load: Vec<f64> = base.iter().map(|p| p.weight).collect();
    let mut sets: Vec<BTreeSet<usize>> = base.into_iter().map(|p| p.nodes).collect();
    for p in pieces {
        let attach = |r: usize| p.nodes.iter().map(|&x| metric.d(roots[r], x)).fold(f64::INFINITY, f64::min);
        let r = (0..k)
            .min_by(|&i, &j| (load[i] + attach(i)).total_cmp(&(load[j] + attach(j))).then(i.cmp(&j)))
            .unwrap();
        load[r] += attach(r) + p.weight;
        sets[r].extend(p.nodes);
    }
    finish(metric, roots, sets)
}

/// Best split of the terminals among the roots when each root spans its
/// share with a minimum spanning tree.
fn exact_partition(metric: &MetricSpace, roots: &[usize], terms: &[usize]) -> TreeCover {
    let t = terms.len();
    let full = (1usize << t) - 1;
    let cost: Vec<Vec<f64>> = roots
        .iter()
        .map(|&r| {
            (0..=full)
                .map(|s| {
                    let mut nodes = vec![r];
                    nodes.extend((0..t).filter(|&i| s >> i & 1 == 1).map(|i| terms[i]));
                    crate::graph::mst_weight(&nodes, |u, v| metric.d(u, v))
                })
                .collect()
        })
        .collect();
    // f[j][s]: best max over roots j.. covering s, with the choice made
    let k = roots.len();
    let mut f = vec![vec![f64::INFINITY; full + 1]; k + 1];
    let mut choice = vec![vec![0usize; full + 1]; k];
    f[k][0] = 0.0;
    for j in (0..k).rev() {
        for s in 0..=full {
            let mut a = s;
            loop {
                let v = cost[j][a].max(f[j + 1][s ^ a]);
                if v < f[j][s] {
                    f[j][s] = v;
                    choice[j][s] = a;
                }
                if a == 0 {
                    break;
                }
                a = (a - 1) & s;
            }
        }
    }
    let mut s = full;
    let mut sets = Vec::with_capacity(k);
    for row in &choice {
        let a = row[s];
        sets.push((0..t).filter(|&i| a >> i & 1 == 1).map(|i| terms[i]).collect());
        s ^= a;
    }
    finish(metric, roots, sets)
}

fn cover_input(metric: &MetricSpace, roots: &[usize], terminals: &[usize]) -> Result<Vec<usize>> {
    if roots.is_empty() {
        return Err(Error::Invalid("at least one root is needed".into()));
    }
    let n = metric.n();
    if roots.iter().chain(terminals).any(|&u| u >= n) {
        return Err(Error::Invalid("cover node out of range".into()));
    }
    let root_set: BTreeSet<usize> = roots.iter().copied().collect();
    Ok(terminals
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|u| !root_set.contains(u))
        .collect())
}

/// Rooted min-max tree cover: `roots.len()` trees, tree `i` through
/// `roots[i]`, together containing every terminal. Small terminal sets are
/// partitioned exhaustively, larger ones go to [`minmax_cover_by_splitting`].
pub fn minmax_k_tree_cover(metric: &MetricSpace, roots: &[usize], terminals: &[usize]) -> Result<TreeCover> {
    let terms = cover_input(metric, roots, terminals)?;
    if terms.is_empty() {
        return Ok(finish(metric, roots, vec![BTreeSet::new(); roots.len()]));
    }
    if terms.len() <= EXACT_COVER_TERMINALS {
        return Ok(exact_partition(metric, roots, &terms));
    }
    minmax_cover_by_splitting(metric, roots, terminals)
}

/// Tries guesses `b` from the smallest distance up to the spanning tree
/// weight in steps of 5% and keeps the best cover.
pub fn minmax_cover_by_splitting(metric: &MetricSpace, roots: &[usize], terminals: &[usize]) -> Result<TreeCover> {
    let terms = cover_input(metric, roots, terminals)?;
    if terms.is_empty() {
        return Ok(finish(metric, roots, vec![BTreeSet::new(); roots.len()]));
    }
    let mut all: Vec<usize> = roots.to_vec();
    all.extend(&terms);
    let total = crate::graph::mst_weight(&all, |u, v| metric.d(u, v));
    let lo = metric.min_positive().unwrap_or(total).min(total);
    let mut best: Option<TreeCover> = None;
    let mut b = lo;
    loop {
        let c = cover_for_guess(metric, roots, &terms, b);
        if best.as_ref().is_none_or(|x| c.max_length < x.max_length) {
            best = Some(c);
        }
        if b >= total {
            break;
        }
        b = (b * 1.05).min(total);
    }
    Ok(best.expect("at least one guess"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpandedWalk {
    pub nodes: Vec<usize>,
    pub length: f64,
    /// Length of the doubled tree in the contracted metric.
    pub doubled: f64,
    /// Edges added inside a ball; the first may reattach the depot.
    pub extras: Vec<(usize, usize)>,
    pub reattach: f64,
}

/// Doubles each tree into a closed walk and lays it out in the original
/// metric, joining the entry and exit node of every ball it passes.
pub fn expand_and_reconnect(
    cover: &TreeCover,
    con: &Contraction,
    metric: &MetricSpace,
    depots: &[usize],
) -> Result<Vec<ExpandedWalk>> {
    let mut out = Vec::with_capacity(cover.trees.len());
    for (tree, &depot) in cover.trees.iter().zip(depots) {
        if con.node_of[depot] != tree.root {
            return Err(Error::Invalid(format!("depot {depot} is not in the tree root {}", tree.root)));
        }
        let hat = euler_walk(tree.root, &tree.edges);
        let doubled: f64 = hat.windows(2).map(|w| con.metric.d(w[0], w[1])).sum();
        let mut nodes = vec![depot];
        let mut extras = Vec::new();
        let mut reattach = 0.0;
        for w in hat.windows(2) {
            for (x, y) in con.hops(w[0], w[1]) {
                let last = *nodes.last().expect("walk starts at the depot");
                if last != x {
                    let g = con.node_of[x];
                    if con.node_of[last] != g {
                        return Err(invariant("expansion", format!("hop leaves from {x} but the walk is at {last}")));
                    }
                    let d = metric.d(last, x);
                    if !leq(d, 2.0 * con.radius[g]) {
                        return Err(invariant("extra-edge", format!("extra edge {last}-{x} of {d} in ball of radius {}", con.radius[g])));
                    }
                    if extras.is_empty() && last == depot && nodes.len() == 1 {
                        reattach = d;
                    }
                    extras.push((last, x));
                    nodes.push(x);
                }
                nodes.push(y);
            }
        }
        let length = walk_length(metric, &nodes);
        let touched: BTreeSet<usize> = nodes.iter().map(|&u| con.node_of[u]).collect();
        if let Some(miss) = tree.nodes.iter().find(|g| !touched.contains(g)) {
            return Err(invariant("expansion", format!("contracted node {miss} of the tree is not on the walk")));
        }
        out.push(ExpandedWalk {
            nodes,
            length,
            doubled,
            extras,
            reattach,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub t: f64,
    pub accepted: bool,
    pub longest_walk: f64,
    pub leaders: usize,
    pub cover_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxMrReport {
    /// Accepted guess in the instance's units.
    pub t_star: f64,
    /// Largest rejected guess, if any.
    pub t_rejected: Option<f64>,
    pub schedule: Schedule,
    pub evaluation: Evaluation,
    pub max_latency: f64,
    /// `10 T*`.
    pub latency_bound: f64,
    pub probes: Vec<Probe>,
    pub walks: Vec<ExpandedWalk>,
    pub tagging: Option<ClusterTagging>,
}

struct Accepted {
    walks: Vec<ExpandedWalk>,
    tagging: ClusterTagging,
}

fn probe(inst: &Instance, t: f64, v: f64) -> Result<(Probe, Option<Accepted>)> {
    let tagging = cluster_neighborhoods(inst, t)?;
    let con = contract_leaders(&inst.metric, &tagging);
    let roots: Vec<usize> = inst.repairmen.iter().map(|r| con.node_of[r.depot]).collect();
    let terminals: Vec<usize> = (0..tagging.leaders.len()).collect();
    let cover = minmax_k_tree_cover(&con.metric, &roots, &terminals)?;
    let depots: Vec<usize> = inst.repairmen.iter().map(|r| r.depot).collect();
    let walks = expand_and_reconnect(&cover, &con, &inst.metric, &depots)?;
    let longest = walks.iter().map(|w| w.length).fold(0.0, f64::max);
    let accepted = leq(longest, 10.0 * v * t);
    let p = Probe {
        t,
        accepted,
        longest_walk: longest,
        leaders: tagging.leaders.len(),
        cover_max: cover.max_length,
    };
    Ok((p, accepted.then_some(Accepted { walks, tagging })))
}

/// A positive lower bound on the optimum when some client is not at a
/// depot: every client needs a repairman and itself at a common node.
fn latency_floor(inst: &Instance) -> Option<f64> {
    let depots: Vec<usize> = inst.repairmen.iter().map(|r| r.depot).collect();
    let mut floor: Option<f64> = None;
    for c in 0..inst.clients.len() {
        let need = (0..inst.n())
            .flat_map(|u| inst.repairmen.iter().map(move |r| (u, r)))
            .map(|(u, r)| (inst.metric.d(r.depot, u) / r.speed).max(inst.client_reach_time(c, u)))
            .fold(f64::INFINITY, f64::min);
        if need > 0.0 && !depots.contains(&inst.clients[c].start) {
            floor = Some(floor.map_or(need, |f: f64| f.max(need)));
        }
    }
    floor
}

pub fn solve_max_mr(inst: &Instance, eps: f64) -> Result<MaxMrReport> {
    inst.validate()?;
    if !(eps > 0.0) {
        return Err(Error::Invalid("eps must be positive".into()));
    }
    let v = inst.repairmen[0].speed;
    if inst.repairmen.iter().any(|r| !approx_eq(r.speed, v)) {
        return Err(Error::Invalid(
            "Max-MR needs all repairmen at the same speed; this instance mixes speeds".into(),
        ));
    }
    let depot_walks = || Schedule {
        walks: inst
            .repairmen
            .iter()
            .map(|r| TimedWalk {
                owner: r.id,
                nodes: vec![r.depot],
                times: vec![0.0],
            })
            .collect(),
        assignments: vec![None; inst.clients.len()],
    };
    let Some(lo) = latency_floor(inst) else {
        let schedule = depot_walks();
        let evaluation = evaluate_indirect(inst, &schedule)?;
        if !evaluation.all_served() || evaluation.max() > 0.0 {
            return Err(invariant("max-latency", "clients at depots must have latency 0"));
        }
        return Ok(MaxMrReport {
            t_star: 0.0,
            t_rejected: None,
            max_latency: 0.0,
            latency_bound: 0.0,
            schedule,
            evaluation,
            probes: Vec::new(),
            walks: Vec::new(),
            tagging: None,
        });
    };
    let mut hi = (2.0 * inst.metric.mst_weight() / v).max(lo);
    let mut probes = Vec::new();
    let (p, mut acc) = probe(inst, lo, v)?;
    probes.push(p);
    let mut t_rejected = None;
    let mut t_star = lo;
    if acc.is_none() {
        t_rejected = Some(lo);
        let mut lo = lo;
        let mut hi_acc = None;
        for _ in 0..64 {
            let (p, a) = probe(inst, hi, v)?;
            probes.push(p);
            if a.is_some() {
                hi_acc = a;
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        let Some(mut best) = hi_acc else {
            return Err(invariant("max-search", "no guess was accepted"));
        };
        while hi > (1.0 + eps) * lo {
            let mid = (lo * hi).sqrt();
            let (p, a) = probe(inst, mid, v)?;
            probes.push(p);
            match a {
                Some(a) => {
                    hi = mid;
                    best = a;
                }
                None => lo = mid,
            }
        }
        t_rejected = Some(lo).or(t_rejected);
        t_star = hi;
        acc = Some(best);
    }
    let acc = acc.expect("accepted guess");
    let schedule = Schedule {
        walks: acc
            .walks
            .iter()
            .zip(&inst.repairmen)
            .map(|(w, r)| TimedWalk::full_speed(r.id, w.nodes.clone(), 0.0, r.speed, &inst.metric))
            .collect(),
        assignments: vec![None; inst.clients.len()],
    };
    let evaluation = evaluate_indirect(inst, &schedule)?;
    let bound = 10.0 * t_star;
    for c in 0..inst.clients.len() {
        let near = acc.walks.iter().flat_map(|w| &w.nodes).any(|&u| inst.in_ball(c, 10.0 * t_star, u));
        if !near {
            return Err(invariant("client-reach", format!("client {c} has no walk node within 10 t_c")));
        }
    }
    if !evaluation.all_served() || !leq(evaluation.max(), bound) {
        return Err(invariant("max-latency", format!("max latency {} over 10 T = {bound}", evaluation.max())));
    }
    Ok(MaxMrReport {
        t_star,
        t_rejected,
        max_latency: evaluation.max(),
        latency_bound: bound,
        schedule,
        evaluation,
        probes,
        walks: acc.walks,
        tagging: Some(acc.tagging),
    })
}
