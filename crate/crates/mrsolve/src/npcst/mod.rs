//! Neighborhood prize-collecting Steiner trees.
//!
//! Find a tree through the root of cost at most `budget` that maximizes
//! the profit of clients whose ball (all nodes within `radius` of the
//! client) the tree touches. A `(sigma, phi, omega)` approximation may
//! stretch radii by `sigma`, exceed the budget by `phi`, and collect a
//! `1/omega` fraction of the optimum.

pub mod euclid;
pub mod general;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph;
use crate::model::MetricSpace;
use crate::num::leq;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NpcstClient {
    pub node: usize,
    pub profit: f64,
    pub radius: f64,
}

#[derive(Clone, Debug)]
pub struct NpcstInstance<'a> {
    pub metric: &'a MetricSpace,
    pub root: usize,
    pub clients: Vec<NpcstClient>,
    pub budget: f64,
}

impl NpcstInstance<'_> {
    /// Whether node `u` lies in client `c`'s ball stretched by `sigma`.
    pub fn in_ball(&self, c: usize, u: usize, sigma: f64) -> bool {
        let cl = &self.clients[c];
        u == cl.node || leq(self.metric.d(cl.node, u), sigma * cl.radius)
    }

    /// Clients whose ball is farther than the budget from the root. No
    /// tree within budget can touch them.
    pub fn unreachable(&self) -> Vec<usize> {
        (0..self.clients.len())
            .filter(|&c| {
                let nearest = (0..self.metric.n())
                    .filter(|&u| self.in_ball(c, u, 1.0))
                    .map(|u| self.metric.d(self.root, u))
                    .fold(f64::INFINITY, f64::min);
                !leq(nearest, self.budget)
            })
            .collect()
    }
}

/// A tree in the metric, as an edge list plus its node set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricTree {
    /// Sorted node ids.
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub cost: f64,
}

impl MetricTree {
    pub fn single(root: usize) -> Self {
        Self {
            nodes: vec![root],
            edges: Vec::new(),
            cost: 0.0,
        }
    }

    /// Minimum spanning tree over `nodes`.
    pub fn spanning(metric: &MetricSpace, nodes: &[usize]) -> Self {
        let mut sorted = nodes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let edges = graph::mst_edges(&sorted, |u, v| metric.d(u, v));
        Self {
            cost: graph::edges_weight(metric, &edges),
            nodes: sorted,
            edges,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriCriteriaSolution {
    pub tree: MetricTree,
    pub profit: f64,
    /// Clients with a tree node inside their `sigma`-stretched ball.
    pub hit: Vec<usize>,
    /// Declared factors.
    pub sigma: f64,
    pub phi: f64,
    /// Largest `dist(client, tree) / radius` over hit clients.
    pub sigma_measured: f64,
    /// `cost / budget`.
    pub phi_measured: f64,
}

impl TriCriteriaSolution {
    pub fn new(inst: &NpcstInstance, tree: MetricTree, sigma: f64, phi: f64) -> Self {
        let (hit, profit) = hit_profit(&tree.nodes, inst, sigma);
        let sigma_measured = hit
            .iter()
            .map(|&c| {
                let cl = &inst.clients[c];
                let d = inst.metric.dist_to_set(cl.node, &tree.nodes);
                if d == 0.0 {
                    0.0
                } else {
                    d / cl.radius
                }
            })
            .fold(0.0, f64::max);
        let phi_measured = if tree.cost == 0.0 {
            0.0
        } else {
            tree.cost / inst.budget
        };
        Self {
            tree,
            profit,
            hit,
            sigma,
            phi,
            sigma_measured,
            phi_measured,
        }
    }
}

/// Clients whose `sigma`-stretched ball contains a tree node, and their
/// total profit.
pub fn hit_profit(tree_nodes: &[usize], inst: &NpcstInstance, sigma: f64) -> (Vec<usize>, f64) {
    let hit: Vec<usize> = (0..inst.clients.len())
        .filter(|&c| tree_nodes.iter().any(|&u| inst.in_ball(c, u, sigma)))
        .collect();
    let profit = hit.iter().map(|&c| inst.clients[c].profit).sum();
    (hit, profit)
}

/// Declared approximation factors of a solver on `n` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factors {
    pub sigma: f64,
    pub phi: f64,
    pub omega: f64,
}

pub trait NpcstSolver: Sync {
    fn solve(&self, inst: &NpcstInstance) -> Result<TriCriteriaSolution>;
    fn factors(&self, n: usize) -> Factors;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hits() {
        let m = MetricSpace::from_fn(3, |u, v| (u as f64 - v as f64).abs() * 10.0);
        let inst = NpcstInstance {
            metric: &m,
            root: 0,
            clients: vec![NpcstClient {
                node: 1,
                profit: 2.0,
                radius: 10.0,
            }],
            budget: 0.0,
        };
        assert_eq!(hit_profit(&[0], &inst, 1.0), (vec![0], 2.0));
        assert_eq!(hit_profit(&[2], &inst, 0.5), (vec![], 0.0));
    }
}
