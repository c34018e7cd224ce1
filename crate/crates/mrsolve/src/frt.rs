//! Random dominating tree metrics (Fakcharoenphol-Rao-Talwar).
//!
//! Distances are first scaled so the smallest positive one is 1. A random
//! permutation and a radius factor `beta` in `[1,2)` drive a top-down
//! partition: at level `i` every node joins the first center in permutation
//! order within `beta 2^(i-1)`, restricted to its parent cluster. A
//! level-`i` cluster hangs below its parent by an edge of twice the
//! parent's radius, `beta 2^(i+1)` (unscaled back afterwards). That bounds
//! the parent cluster's diameter, so every tree node can be represented by
//! a member of its cluster without any tree edge being shorter than the
//! metric distance between the representatives it joins.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MetricSpace;
use crate::num::ceil_log2;
use crate::treedp::RootedTree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominatingTree {
    pub seed: u64,
    pub beta: f64,
    /// Rooted at the top cluster; `length` holds edge lengths, `cost` is unused.
    pub tree: RootedTree,
    /// Partition level of each tree node (leaves of distinct points sit at 0).
    pub level: Vec<i32>,
    /// A metric node inside the cluster of each tree node.
    pub image: Vec<usize>,
    /// Tree node of each metric node.
    pub leaf: Vec<usize>,
}

impl DominatingTree {
    pub fn distance(&self, u: usize, v: usize) -> f64 {
        self.tree.distance(self.leaf[u], self.leaf[v])
    }

    pub fn diameter(&self) -> f64 {
        let n = self.leaf.len();
        let mut best = 0.0f64;
        for u in 0..n {
            for v in u + 1..n {
                best = best.max(self.distance(u, v));
            }
        }
        best
    }
}

pub fn tree_distance(t: &DominatingTree, u: usize, v: usize) -> Result<f64> {
    let n = t.leaf.len();
    if u >= n || v >= n {
        return Err(Error::Invalid(format!("node ({u},{v}) outside the embedded metric of {n} nodes")));
    }
    Ok(t.distance(u, v))
}

struct Builder {
    parent: Vec<Option<usize>>,
    length: Vec<f64>,
    level: Vec<i32>,
    image: Vec<usize>,
}

impl Builder {
    fn add(&mut self, parent: Option<usize>, length: f64, level: i32, image: usize) -> usize {
        self.parent.push(parent);
        self.length.push(length);
        self.level.push(level);
        self.image.push(image);
        self.parent.len() - 1
    }
}

fn central_member(metric: &MetricSpace, members: &[usize]) -> usize {
    *members
        .iter()
        .min_by(|&&a, &&b| {
            let ea = members.iter().map(|&x| metric.d(a, x)).fold(0.0, f64::max);
            let eb = members.iter().map(|&x| metric.d(b, x)).fold(0.0, f64::max);
            ea.total_cmp(&eb).then(a.cmp(&b))
        })
        .expect("clusters are non-empty")
}

pub fn embed_once(metric: &MetricSpace, seed: u64) -> DominatingTree {
    let n = metric.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let beta: f64 = rng.gen_range(1.0..2.0);
    let scale = metric.min_positive().map_or(1.0, |m| 1.0 / m);
    let top = ceil_log2(metric.diameter() * scale) as i32 + 1;
    let mut b = Builder {
        parent: Vec::new(),
        length: Vec::new(),
        level: Vec::new(),
        image: Vec::new(),
    };
    let all: Vec<usize> = (0..n).collect();
    let root = b.add(None, 0.0, top, central_member(metric, &all));
    let mut leaf = vec![usize::MAX; n];
    let mut frontier = vec![(root, all)];
    for i in (0..top).rev() {
        let radius = beta * 2f64.powi(i - 1);
        let edge = beta * 2f64.powi(i + 1) / scale;
        let mut next = Vec::new();
        for (node, members) in frontier {
            let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
            for &x in &members {
                let center = perm
                    .iter()
                    .position(|&j| metric.d(x, j) * scale <= radius)
                    .expect("every node is its own candidate center");
                match groups.iter_mut().find(|g| g.0 == center) {
                    Some(g) => g.1.push(x),
                    None => groups.push((center, vec![x])),
                }
            }
            groups.sort_by_key(|g| g.0);
            for (_, g) in groups {
                let child = b.add(Some(node), edge, i, central_member(metric, &g));
                next.push((child, g));
            }
        }
        frontier = next;
    }
    // level-0 clusters are single points or groups at distance zero
    for (node, members) in frontier {
        if members.len() == 1 {
            leaf[members[0]] = node;
        } else {
            for &x in &members {
                leaf[x] = b.add(Some(node), 0.0, -1, x);
            }
        }
    }
    let k = b.parent.len();
    let edges: Vec<(usize, usize, u64, f64)> = (0..k)
        .filter_map(|v| b.parent[v].map(|p| (p, v, 0, b.length[v])))
        .collect();
    let tree = RootedTree::new(k, root, &edges).expect("partition forms a tree");
    DominatingTree {
        seed,
        beta,
        tree,
        level: b.level,
        image: b.image,
        leaf,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeDistribution {
    pub trees: Vec<DominatingTree>,
    pub weights: Vec<f64>,
}

fn mix(seed: u64, i: u64) -> u64 {
    // splitmix64 step so neighbouring indices give unrelated streams
    let mut z = seed ^ i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn default_count(n: usize) -> usize {
    (4.0 * (n as f64 * (n as f64).log2()).ceil()).max(1.0) as usize
}

pub fn sample_distribution(metric: &MetricSpace, count: usize, seed: u64) -> TreeDistribution {
    let count = count.max(1);
    let trees: Vec<DominatingTree> = (0..count as u64)
        .into_par_iter()
        .map(|i| embed_once(metric, if count == 1 { seed } else { mix(seed, i) }))
        .collect();
    TreeDistribution {
        weights: vec![1.0 / count as f64; count],
        trees,
    }
}

/// Mean over node pairs at positive distance of `E[d_T(u,v)] / d(u,v)`.
pub fn mean_distortion(metric: &MetricSpace, dist: &TreeDistribution) -> f64 {
    let n = metric.n();
    let (mut sum, mut pairs) = (0.0, 0usize);
    for u in 0..n {
        for v in u + 1..n {
            let d = metric.d(u, v);
            if d > 0.0 {
                let e: f64 = dist.trees.iter().zip(&dist.weights).map(|(t, w)| w * t.distance(u, v)).sum();
                sum += e / d;
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        1.0
    } else {
        sum / pairs as f64
    }
}
