//! NPCST in general metrics through random dominating trees.
//!
//! For every sampled tree and every service budget `2^j` the tree problem
//! (length bound `4 A log n L`, service bound `2^j`) is solved exactly up
//! to scaling, the resulting subtree is carried back into the metric, and
//! the candidate hitting the most profit within `16 A log n` stretched
//! balls wins.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{hit_profit, Factors, MetricTree, NpcstInstance, NpcstSolver, TriCriteriaSolution};
use crate::error::{invariant, Error, Result};
use crate::frt::{default_count, sample_distribution, DominatingTree};
use crate::model::MetricSpace;
use crate::num::{leq, log2_floor1};
use crate::treedp::{solve_tscst, RootedTree, TreeClient, DEFAULT_TABLE_CAP};

/// The distortion constant used when none is configured.
pub const DEFAULT_A: f64 = 16.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralConfig {
    pub a: f64,
    pub eps: f64,
    pub seed: u64,
    /// Number of sampled trees; `None` uses the embedding's default.
    pub trees: Option<usize>,
    /// Integer resolution of the tree length budget.
    pub resolution: u64,
    pub table_cap: usize,
}

impl Default for GeneralConfig {
    fn default() -> Self {
        Self {
            a: DEFAULT_A,
            eps: 1.0,
            seed: 0,
            trees: None,
            resolution: 32,
            table_cap: DEFAULT_TABLE_CAP,
        }
    }
}

pub fn sigma(a: f64, n: usize) -> f64 {
    16.0 * a * log2_floor1(n)
}

pub fn phi(a: f64, n: usize) -> f64 {
    8.0 * a * log2_floor1(n)
}

/// Service budgets to try: zero, then powers of two from the smallest
/// nonzero service cost a client can have up to the largest total.
pub fn service_budgets(inst: &NpcstInstance, max_tree_diameter: f64) -> Vec<f64> {
    let live: Vec<_> = inst.clients.iter().filter(|c| c.profit > 0.0 && c.radius > 0.0).collect();
    let mut out = vec![0.0];
    let total: f64 = live.iter().map(|c| c.profit).sum();
    if live.is_empty() || max_tree_diameter <= 0.0 {
        out.push(1.0);
        return out;
    }
    let t_min = live.iter().map(|c| c.radius).fold(f64::INFINITY, f64::min);
    let t_max = live.iter().map(|c| c.radius).fold(0.0, f64::max);
    let p_min = live.iter().map(|c| c.profit).fold(f64::INFINITY, f64::min);
    let d_min = inst.metric.min_positive().unwrap_or(max_tree_diameter);
    let hi = (total * max_tree_diameter / t_min).log2().ceil().max(0.0) as i32;
    let lo = ((p_min * d_min / t_max).log2().floor() as i32 - 1).clamp(hi - 64, 0);
    out.extend((lo..=hi).map(|j| 2f64.powi(j)));
    out
}

/// Carries a subtree of a dominating tree back into the metric: the MST
/// over the images of its nodes plus `root`. Walking the subtree's Euler
/// tour visits every image and each hop is no longer than its tree edge,
/// so the result costs at most twice the subtree's length.
pub fn transplant_tree(dt: &DominatingTree, hst_nodes: &[usize], metric: &MetricSpace, root: usize) -> MetricTree {
    let mut nodes: Vec<usize> = hst_nodes.iter().map(|&v| dt.image[v]).collect();
    nodes.push(root);
    MetricTree::spanning(metric, &nodes)
}

#[derive(Clone, Debug)]
struct Candidate {
    tree: usize,
    budget: usize,
    profit: f64,
    metric_tree: MetricTree,
}

impl Candidate {
    fn better_than(&self, o: &Candidate) -> bool {
        if self.profit != o.profit {
            return self.profit > o.profit;
        }
        if self.metric_tree.cost != o.metric_tree.cost {
            return self.metric_tree.cost < o.metric_tree.cost;
        }
        (self.tree, self.budget) < (o.tree, o.budget)
    }
}

/// Integer edge costs for the tree problem. With a positive length bound
/// each unit is `bound / resolution`, rounded up, so any subtree within
/// the integer budget is within the real bound.
fn integer_costs(t: &RootedTree, bound: f64, resolution: u64) -> (RootedTree, u64) {
    let mut out = t.clone();
    if bound <= 0.0 {
        for v in 0..t.len() {
            out.cost[v] = u64::from(t.length[v] > 0.0);
        }
        return (out, 0);
    }
    let unit = bound / resolution as f64;
    for v in 0..t.len() {
        let c = t.length[v] / unit;
        out.cost[v] = (c - 1e-9 * c.max(1.0)).ceil().max(0.0) as u64;
    }
    (out, resolution)
}

fn best_on_tree(
    inst: &NpcstInstance,
    cfg: &GeneralConfig,
    idx: usize,
    dt: &DominatingTree,
    budgets: &[f64],
    bound: f64,
    sig: f64,
) -> Result<Option<Candidate>> {
    let rooted = dt.tree.reroot(dt.leaf[inst.root]);
    let (tree, b) = integer_costs(&rooted, bound, cfg.resolution);
    let clients: Vec<TreeClient> = inst
        .clients
        .iter()
        .map(|c| TreeClient {
            node: dt.leaf[c.node],
            profit: c.profit,
            radius: c.radius,
        })
        .collect();
    let mut best: Option<Candidate> = None;
    for (k, &bp) in budgets.iter().enumerate() {
        let sol = solve_tscst(&tree, &clients, b, bp, cfg.eps, cfg.table_cap)?;
        let nodes = &sol.inner.nodes;
        let hst_len: f64 = nodes.iter().filter(|&&v| v != tree.root).map(|&v| tree.length[v]).sum();
        if !leq(hst_len, bound) {
            return Err(invariant("npcst-tree-length", format!("subtree length {hst_len} over bound {bound}")));
        }
        let mt = transplant_tree(dt, nodes, inst.metric, inst.root);
        if !leq(mt.cost, 2.0 * hst_len) {
            return Err(invariant(
                "npcst-transplant",
                format!("metric tree {} exceeds twice the subtree length {hst_len}", mt.cost),
            ));
        }
        let (_, profit) = hit_profit(&mt.nodes, inst, sig);
        let cand = Candidate {
            tree: idx,
            budget: k,
            profit,
            metric_tree: mt,
        };
        if best.as_ref().is_none_or(|b| cand.better_than(b)) {
            best = Some(cand);
        }
    }
    Ok(best)
}

pub fn solve_npcst_general(inst: &NpcstInstance, cfg: &GeneralConfig) -> Result<TriCriteriaSolution> {
    let n = inst.metric.n();
    if inst.root >= n || inst.clients.iter().any(|c| c.node >= n) {
        return Err(Error::Invalid("node id out of range".into()));
    }
    if !(inst.budget >= 0.0) || inst.clients.iter().any(|c| !(c.profit >= 0.0) || !(c.radius >= 0.0)) {
        return Err(Error::Invalid("budget, profits and radii must be non-negative".into()));
    }
    if !(cfg.a > 0.0 && cfg.eps > 0.0 && cfg.resolution > 0) {
        return Err(Error::Invalid("A, eps and resolution must be positive".into()));
    }
    let (sig, ph) = (sigma(cfg.a, n), phi(cfg.a, n));
    let bound = 4.0 * cfg.a * log2_floor1(n) * inst.budget;
    let dist = sample_distribution(inst.metric, cfg.trees.unwrap_or_else(|| default_count(n)), cfg.seed);
    let diam = dist.trees.iter().map(|t| t.diameter()).fold(0.0, f64::max);
    let budgets = service_budgets(inst, diam);
    let per_tree: Vec<Option<Candidate>> = dist
        .trees
        .par_iter()
        .enumerate()
        .map(|(i, dt)| best_on_tree(inst, cfg, i, dt, &budgets, bound, sig))
        .collect::<Result<_>>()?;
    let mut best: Option<Candidate> = None;
    for c in per_tree.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| c.better_than(b)) {
            best = Some(c);
        }
    }
    let tree = best.map_or_else(|| MetricTree::single(inst.root), |c| c.metric_tree);
    if !leq(tree.cost, ph * inst.budget) {
        return Err(invariant("npcst-cost", format!("cost {} over {ph} x {}", tree.cost, inst.budget)));
    }
    let sol = TriCriteriaSolution::new(inst, tree, sig, ph);
    if sol.sigma_measured > sig * (1.0 + 1e-9) {
        return Err(invariant("npcst-stretch", format!("stretch {} over {sig}", sol.sigma_measured)));
    }
    Ok(sol)
}

#[derive(Clone, Debug, Default)]
pub struct GeneralSolver {
    pub cfg: GeneralConfig,
}

impl NpcstSolver for GeneralSolver {
    fn solve(&self, inst: &NpcstInstance) -> Result<TriCriteriaSolution> {
        solve_npcst_general(inst, &self.cfg)
    }

    fn factors(&self, n: usize) -> Factors {
        Factors {
            sigma: sigma(self.cfg.a, n),
            phi: phi(self.cfg.a, n),
            omega: 2.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frt::embed_once;
    use crate::npcst::NpcstClient;

    fn line(n: usize) -> MetricSpace {
        MetricSpace::from_fn(n, |u, v| (u as f64 - v as f64).abs())
    }

    #[test]
    fn client_at_root() {
        let m = line(4);
        let inst = NpcstInstance {
            metric: &m,
            root: 0,
            clients: vec![NpcstClient {
                node: 0,
                profit: 2.0,
                radius: 1.0,
            }],
            budget: 5.0,
        };
        let cfg = GeneralConfig {
            trees: Some(4),
            ..Default::default()
        };
        let s = solve_npcst_general(&inst, &cfg).unwrap();
        assert_eq!(s.profit, 2.0);
        assert_eq!(s.sigma_measured, 0.0);
        assert_eq!(s.tree.cost, 0.0);
    }

    #[test]
    fn zero_profits() {
        let m = line(4);
        let inst = NpcstInstance {
            metric: &m,
            root: 0,
            clients: vec![NpcstClient {
                node: 3,
                profit: 0.0,
                radius: 1.0,
            }],
            budget: 5.0,
        };
        let s = solve_npcst_general(&inst, &GeneralConfig::default()).unwrap();
        assert_eq!(s.profit, 0.0);
    }

    #[test]
    fn transplant_small() {
        let m = line(3);
        let dt = embed_once(&m, 5);
        let single = transplant_tree(&dt, &[dt.leaf[1]], &m, 1);
        assert_eq!(single.cost, 0.0);
        let pair = transplant_tree(&dt, &[dt.leaf[0], dt.leaf[2]], &m, 0);
        assert_eq!(pair.cost, 2.0);
        assert!(pair.cost <= dt.distance(0, 2));
    }
}
