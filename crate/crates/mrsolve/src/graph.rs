//! Small graph routines on complete metric graphs.

use crate::model::MetricSpace;

/// Prim's algorithm on the complete graph over `nodes`. Returns edges as
/// pairs of node ids; ties go to the lower position in `nodes`.
pub fn mst_edges(nodes: &[usize], d: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    let k = nodes.len();
    if k <= 1 {
        return Vec::new();
    }
    let mut in_tree = vec![false; k];
    let mut best = vec![f64::INFINITY; k];
    let mut from = vec![0usize; k];
    in_tree[0] = true;
    for j in 1..k {
        best[j] = d(nodes[0], nodes[j]);
    }
    let mut edges = Vec::with_capacity(k - 1);
    for _ in 1..k {
        let mut pick = usize::MAX;
        for j in 0..k {
            if !in_tree[j] && (pick == usize::MAX || best[j] < best[pick]) {
                pick = j;
            }
        }
        in_tree[pick] = true;
        edges.push((nodes[from[pick]], nodes[pick]));
        for j in 0..k {
            if !in_tree[j] {
                let w = d(nodes[pick], nodes[j]);
                if w < best[j] {
                    best[j] = w;
                    from[j] = pick;
                }
            }
        }
    }
    edges
}

pub fn mst_weight(nodes: &[usize], d: impl Fn(usize, usize) -> f64) -> f64 {
    mst_edges(nodes, &d).iter().map(|&(u, v)| d(u, v)).sum()
}

pub fn walk_length(metric: &MetricSpace, nodes: &[usize]) -> f64 {
    nodes.windows(2).map(|w| metric.d(w[0], w[1])).sum()
}

pub fn edges_weight(metric: &MetricSpace, edges: &[(usize, usize)]) -> f64 {
    edges.iter().map(|&(u, v)| metric.d(u, v)).sum()
}

fn adjacency(root: usize, edges: &[(usize, usize)]) -> std::collections::BTreeMap<usize, Vec<usize>> {
    let mut adj: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    adj.entry(root).or_default();
    for &(u, v) in edges {
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    for list in adj.values_mut() {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Closed walk around a tree (every edge twice), children in id order.
/// The edge list must form a tree containing `root`.
pub fn euler_walk(root: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let adj = adjacency(root, edges);
    let mut walk = vec![root];
    let mut seen = std::collections::BTreeSet::from([root]);
    // explicit stack of (node, next child index)
    let mut stack = vec![(root, 0usize)];
    while let Some(top) = stack.len().checked_sub(1) {
        let (u, i) = stack[top];
        let children = &adj[&u];
        if let Some(&c) = children.get(i) {
            stack[top].1 += 1;
            if seen.insert(c) {
                walk.push(c);
                stack.push((c, 0));
            }
        } else {
            stack.pop();
            if let Some(&(p, _)) = stack.last() {
                walk.push(p);
            }
        }
    }
    walk
}

/// Depth-first preorder of a tree: the doubled tree walk with repeated
/// nodes shortcut and the final return dropped.
pub fn preorder_walk(root: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut seen = std::collections::BTreeSet::new();
    euler_walk(root, edges).into_iter().filter(|&u| seen.insert(u)).collect()
}

/// All-pairs shortest paths with next-hop table for path reconstruction.
#[derive(Clone, Debug)]
pub struct ShortestPaths {
    n: usize,
    pub dist: Vec<f64>,
    next: Vec<usize>,
}

impl ShortestPaths {
    pub fn new(n: usize, w: impl Fn(usize, usize) -> f64) -> Self {
        let mut dist = vec![0.0; n * n];
        let mut next = vec![0usize; n * n];
        for u in 0..n {
            for v in 0..n {
                dist[u * n + v] = if u == v { 0.0 } else { w(u, v) };
                next[u * n + v] = v;
            }
        }
        for k in 0..n {
            for u in 0..n {
                let duk = dist[u * n + k];
                if !duk.is_finite() {
                    continue;
                }
                for v in 0..n {
                    let alt = duk + dist[k * n + v];
                    if alt < dist[u * n + v] {
                        dist[u * n + v] = alt;
                        next[u * n + v] = next[u * n + k];
                    }
                }
            }
        }
        Self { n, dist, next }
    }

    pub fn d(&self, u: usize, v: usize) -> f64 {
        self.dist[u * self.n + v]
    }

    /// Vertex sequence of a shortest `u`-`v` path, both ends included.
    pub fn path(&self, u: usize, v: usize) -> Vec<usize> {
        let mut out = vec![u];
        let mut cur = u;
        while cur != v {
            cur = self.next[cur * self.n + v];
            out.push(cur);
        }
        out
    }
}
