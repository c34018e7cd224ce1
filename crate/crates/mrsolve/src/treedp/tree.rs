use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rooted tree with an integer cost (budget units) and a real length
/// (distance units) on each edge to the parent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootedTree {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub cost: Vec<u64>,
    pub length: Vec<f64>,
    /// For binarized trees: the original node, `None` for added split nodes.
    pub orig: Vec<Option<usize>>,
}

impl RootedTree {
    /// `edges` are `(parent, child, cost, length)`.
    pub fn new(n: usize, root: usize, edges: &[(usize, usize, u64, f64)]) -> Result<Self> {
        if root >= n {
            return Err(Error::Invalid(format!("root {root} out of range")));
        }
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut cost = vec![0; n];
        let mut length = vec![0.0; n];
        for &(p, c, w, l) in edges {
            if p >= n || c >= n || c == root || parent[c].is_some() || p == c {
                return Err(Error::Invalid(format!("bad tree edge ({p},{c})")));
            }
            parent[c] = Some(p);
            children[p].push(c);
            cost[c] = w;
            length[c] = l;
        }
        let t = Self {
            root,
            parent,
            children,
            cost,
            length,
            orig: (0..n).map(Some).collect(),
        };
        if t.preorder().len() != n {
            return Err(Error::Invalid("edges do not form a tree spanning all nodes".into()));
        }
        Ok(t)
    }

    /// Tree whose lengths equal its integer costs.
    pub fn with_costs(n: usize, root: usize, edges: &[(usize, usize, u64)]) -> Result<Self> {
        let e: Vec<_> = edges.iter().map(|&(p, c, w)| (p, c, w, w as f64)).collect();
        Self::new(n, root, &e)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.children[v].iter().rev());
        }
        out
    }

    /// Sum of lengths from the root.
    pub fn depths(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.len()];
        for v in self.preorder() {
            if let Some(p) = self.parent[v] {
                d[v] = d[p] + self.length[v];
            }
        }
        d
    }

    /// Length of the unique path between `u` and `v`.
    pub fn distance(&self, u: usize, v: usize) -> f64 {
        let mut anc = std::collections::BTreeMap::new();
        let (mut x, mut acc) = (u, 0.0);
        loop {
            anc.insert(x, acc);
            match self.parent[x] {
                Some(p) => {
                    acc += self.length[x];
                    x = p;
                }
                None => break,
            }
        }
        let (mut y, mut acc2) = (v, 0.0);
        loop {
            if let Some(a) = anc.get(&y) {
                return a + acc2;
            }
            acc2 += self.length[y];
            y = self.parent[y].expect("nodes share the root");
        }
    }

    /// Whether `nodes` is a connected set containing the root.
    pub fn is_rooted_subtree(&self, nodes: &[usize]) -> bool {
        let set: std::collections::BTreeSet<usize> = nodes.iter().copied().collect();
        set.contains(&self.root) && set.iter().all(|&v| v == self.root || self.parent[v].is_some_and(|p| set.contains(&p)))
    }

    /// The same tree hanging from `new_root`, node ids and edges unchanged.
    pub fn reroot(&self, new_root: usize) -> RootedTree {
        let n = self.len();
        let mut adj: Vec<Vec<(usize, u64, f64)>> = vec![Vec::new(); n];
        for v in 0..n {
            if let Some(p) = self.parent[v] {
                adj[p].push((v, self.cost[v], self.length[v]));
                adj[v].push((p, self.cost[v], self.length[v]));
            }
        }
        let mut edges = Vec::with_capacity(n.saturating_sub(1));
        let mut seen = vec![false; n];
        seen[new_root] = true;
        let mut stack = vec![new_root];
        while let Some(u) = stack.pop() {
            adj[u].sort_by_key(|e| e.0);
            for &(w, c, l) in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    edges.push((u, w, c, l));
                    stack.push(w);
                }
            }
        }
        let mut t = RootedTree::new(n, new_root, &edges).expect("re-rooting keeps a tree");
        t.orig = self.orig.clone();
        t
    }

    /// Replaces every node with more than two children by a balanced binary
    /// tree of zero-cost split nodes. Original children keep their edge.
    pub fn binarize(&self) -> RootedTree {
        let mut out = RootedTree {
            root: self.root,
            parent: self.parent.clone(),
            children: vec![Vec::new(); self.len()],
            cost: self.cost.clone(),
            length: self.length.clone(),
            orig: self.orig.clone(),
        };
        for v in 0..self.len() {
            attach(&mut out, v, &self.children[v]);
        }
        out
    }
}

fn attach(t: &mut RootedTree, v: usize, kids: &[usize]) {
    if kids.len() <= 2 {
        for &c in kids {
            t.parent[c] = Some(v);
            t.children[v].push(c);
        }
        return;
    }
    let (left, right) = kids.split_at(kids.len().div_ceil(2));
    for half in [left, right] {
        if half.len() == 1 {
            attach(t, v, half);
        } else {
            let d = t.len();
            t.parent.push(Some(v));
            t.children.push(Vec::new());
            t.cost.push(0);
            t.length.push(0.0);
            t.orig.push(None);
            t.children[v].push(d);
            attach(t, d, half);
        }
    }
}
