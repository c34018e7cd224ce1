//! Budgeted subtrees on a tree metric with a second budget on the summed
//! service cost of the clients they serve.
//!
//! A client `c` at tree node `x` with profit `theta` and radius `t` served
//! by subtree `H` costs `theta * d_T(x, H) / t`. The scaled problem rounds
//! this down to an integer multiple of a unit `X` and is solved exactly by
//! a dynamic program over a binarized tree: for node `v`, length budget `b`
//! and service budget `s`, the best subtree rooted at `v` is either `{v}`
//! alone (a knapsack over the clients below `v`), `v` plus one child's
//! subtree (a knapsack for the other child's clients, served from `v`), or
//! `v` plus both children's subtrees.

pub mod knapsack;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{invariant, Error, Result};
pub use knapsack::{knapsack_max, KnapsackTable};
pub use tree::RootedTree;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeClient {
    pub node: usize,
    pub profit: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StscstInstance {
    pub tree: RootedTree,
    pub clients: Vec<TreeClient>,
    /// Bound on the summed integer edge cost of the subtree.
    pub b: u64,
    /// Bound on the summed scaled service cost.
    pub b_hat: u64,
    /// Scale unit. Zero means only clients at distance zero may be served.
    pub x: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StscstSolution {
    /// Tree nodes of the subtree, sorted; contains the root.
    pub nodes: Vec<usize>,
    /// Served client indices, sorted.
    pub served: Vec<usize>,
    pub profit: f64,
    pub cost: u64,
    pub scaled_service: u64,
}

/// `floor(profit * d / (radius * x))`, or `None` when the client cannot be
/// served at that distance (zero unit or zero radius with `d > 0`).
pub fn scaled_cost(cl: &TreeClient, d: f64, x: f64) -> Option<u64> {
    if d <= 0.0 || cl.profit == 0.0 {
        return Some(0);
    }
    if x <= 0.0 || cl.radius <= 0.0 {
        return None;
    }
    let v = cl.profit * d / (cl.radius * x);
    Some((v + 1e-9 * v.max(1.0)).floor() as u64)
}

#[derive(Clone, Copy, Debug)]
enum Choice {
    Alone,
    /// Child at this position in `children[v]` is in the subtree; `s1` of the
    /// service budget goes to it, the rest to the other side's knapsack.
    One { child: usize, s1: u64 },
    Both { b1: u64, s1: u64 },
}

struct NodeTables {
    best: Vec<f64>,
    choice: Vec<Choice>,
    alone: KnapsackTable,
    alone_items: Vec<usize>,
    /// Knapsack over each child's clients served from `v`.
    far: Vec<(KnapsackTable, Vec<usize>)>,
}

pub const DEFAULT_TABLE_CAP: usize = 50_000_000;

pub fn solve_stscst(inst: &StscstInstance, table_cap: usize) -> Result<StscstSolution> {
    let bt = inst.tree.binarize();
    let n = bt.len();
    let (bw, sw) = (inst.b as usize + 1, inst.b_hat as usize + 1);
    let cells = bw.checked_mul(sw).and_then(|c| c.checked_mul(n));
    if cells.is_none_or(|c| c > table_cap) {
        return Err(Error::CapExceeded(format!(
            "DP table {n} x {bw} x {sw} exceeds the cap of {table_cap} cells"
        )));
    }
    for cl in &inst.clients {
        if cl.node >= inst.tree.len() {
            return Err(Error::Invalid(format!("client at unknown tree node {}", cl.node)));
        }
    }
    let depth = bt.depths();
    let mut at = vec![Vec::new(); n];
    for (i, cl) in inst.clients.iter().enumerate() {
        at[cl.node].push(i);
    }
    let order = bt.preorder();
    let mut sub: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &v in order.iter().rev() {
        let mut s = at[v].clone();
        for &c in &bt.children[v] {
            s.extend_from_slice(&sub[c]);
        }
        s.sort_unstable();
        sub[v] = s;
    }
    let knap_from = |v: usize, set: &[usize]| -> (KnapsackTable, Vec<usize>) {
        let mut items = Vec::new();
        let mut ids = Vec::new();
        for &c in set {
            let cl = &inst.clients[c];
            if let Some(w) = scaled_cost(cl, depth[cl.node] - depth[v], inst.x) {
                items.push((w, cl.profit));
                ids.push(c);
            }
        }
        (KnapsackTable::new(&items, inst.b_hat), ids)
    };
    let idx = |b: usize, s: usize| b * sw + s;
    let mut tables: Vec<Option<NodeTables>> = (0..n).map(|_| None).collect();
    for &v in order.iter().rev() {
        let (alone, alone_items) = knap_from(v, &sub[v]);
        let far: Vec<_> = bt.children[v].iter().map(|&c| knap_from(v, &sub[c])).collect();
        let free: f64 = at[v].iter().map(|&c| inst.clients[c].profit).sum();
        let mut best = vec![0.0; bw * sw];
        let mut choice = vec![Choice::Alone; bw * sw];
        let kids = &bt.children[v];
        for b in 0..bw {
            for s in 0..sw {
                let mut val = alone.best[s];
                let mut ch = Choice::Alone;
                for (pos, &a) in kids.iter().enumerate() {
                    let ea = bt.cost[a] as usize;
                    if ea > b {
                        continue;
                    }
                    let ta = tables[a].as_ref().expect("children first");
                    let other = (kids.len() == 2).then(|| &far[1 - pos].0);
                    // a lone child gets the whole service budget
                    let lo = if other.is_some() { 0 } else { s };
                    for s1 in lo..=s {
                        let rest = other.map_or(0.0, |k| k.best[s - s1]);
                        let cand = ta.best[idx(b - ea, s1)] + rest + free;
                        if cand > val {
                            val = cand;
                            ch = Choice::One { child: pos, s1: s1 as u64 };
                        }
                    }
                }
                if kids.len() == 2 {
                    let (c1, c2) = (kids[0], kids[1]);
                    let e = (bt.cost[c1] + bt.cost[c2]) as usize;
                    if e <= b {
                        let (t1, t2) = (tables[c1].as_ref().unwrap(), tables[c2].as_ref().unwrap());
                        let rest = b - e;
                        for b1 in 0..=rest {
                            for s1 in 0..=s {
                                let cand = t1.best[idx(b1, s1)] + t2.best[idx(rest - b1, s - s1)] + free;
                                if cand > val {
                                    val = cand;
                                    ch = Choice::Both { b1: b1 as u64, s1: s1 as u64 };
                                }
                            }
                        }
                    }
                }
                best[idx(b, s)] = val;
                choice[idx(b, s)] = ch;
            }
        }
        tables[v] = Some(NodeTables {
            best,
            choice,
            alone,
            alone_items,
            far,
        });
    }
    let mut nodes = Vec::new();
    let mut served = Vec::new();
    let mut stack = vec![(bt.root, inst.b as usize, inst.b_hat as usize)];
    while let Some((v, b, s)) = stack.pop() {
        let t = tables[v].as_ref().unwrap();
        nodes.push(v);
        match t.choice[idx(b, s)] {
            Choice::Alone => served.extend(t.alone.choose(s as u64).into_iter().map(|i| t.alone_items[i])),
            Choice::One { child, s1 } => {
                let kids = &bt.children[v];
                let a = kids[child];
                served.extend(at[v].iter().copied().filter(|&c| inst.clients[c].profit > 0.0));
                if kids.len() == 2 {
                    let (k, ids) = &t.far[1 - child];
                    served.extend(k.choose(s as u64 - s1).into_iter().map(|i| ids[i]));
                }
                stack.push((a, b - bt.cost[a] as usize, s1 as usize));
            }
            Choice::Both { b1, s1 } => {
                let kids = &bt.children[v];
                let rest = b - (bt.cost[kids[0]] + bt.cost[kids[1]]) as usize;
                served.extend(at[v].iter().copied().filter(|&c| inst.clients[c].profit > 0.0));
                stack.push((kids[0], b1 as usize, s1 as usize));
                stack.push((kids[1], rest - b1 as usize, s - s1 as usize));
            }
        }
    }
    let value = tables[bt.root].as_ref().unwrap().best[idx(inst.b as usize, inst.b_hat as usize)];
    let mut orig_nodes: Vec<usize> = nodes.iter().filter_map(|&v| bt.orig[v]).collect();
    orig_nodes.sort_unstable();
    served.sort_unstable();
    served.dedup();
    let sol = recompute(inst, orig_nodes, served)?;
    if (sol.profit - value).abs() > 1e-9 * value.abs().max(1.0) {
        return Err(invariant(
            "stscst-reconstruction",
            format!("reconstructed profit {} differs from table value {value}", sol.profit),
        ));
    }
    Ok(sol)
}

/// Re-derives cost and service cost from scratch and checks both budgets.
fn recompute(inst: &StscstInstance, nodes: Vec<usize>, served: Vec<usize>) -> Result<StscstSolution> {
    let tree = &inst.tree;
    if !tree.is_rooted_subtree(&nodes) {
        return Err(invariant("stscst-reconstruction", "subtree is not connected to the root"));
    }
    let cost: u64 = nodes.iter().filter(|&&v| v != tree.root).map(|&v| tree.cost[v]).sum();
    let mut service = 0u64;
    for &c in &served {
        let cl = &inst.clients[c];
        let d = nodes.iter().map(|&h| tree.distance(cl.node, h)).fold(f64::INFINITY, f64::min);
        service += scaled_cost(cl, d, inst.x)
            .ok_or_else(|| invariant("stscst-reconstruction", format!("client {c} served at unservable distance")))?;
    }
    if cost > inst.b || service > inst.b_hat {
        return Err(invariant(
            "stscst-budgets",
            format!("cost {cost} / {} and service {service} / {}", inst.b, inst.b_hat),
        ));
    }
    Ok(StscstSolution {
        profit: served.iter().map(|&c| inst.clients[c].profit).sum(),
        nodes,
        served,
        cost,
        scaled_service: service,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TscstSolution {
    pub inner: StscstSolution,
    /// Unscaled `sum theta d_T(c,H) / t` over served clients.
    pub service: f64,
    pub x: f64,
}

/// Service budget `b_prime` handled by scaling with `X = b_prime eps / |C|`.
/// Profit is at least the unscaled optimum; the actual service cost is at
/// most `(1 + eps) b_prime`.
pub fn solve_tscst(tree: &RootedTree, clients: &[TreeClient], b: u64, b_prime: f64, eps: f64, table_cap: usize) -> Result<TscstSolution> {
    if !(eps > 0.0) {
        return Err(Error::Invalid("eps must be positive".into()));
    }
    let k = clients.len().max(1) as f64;
    let (x, b_hat) = if b_prime <= 0.0 {
        (0.0, 0)
    } else {
        let x = b_prime * eps / k;
        (x, (k / eps + 1e-9).floor() as u64)
    };
    let inst = StscstInstance {
        tree: tree.clone(),
        clients: clients.to_vec(),
        b,
        b_hat,
        x,
    };
    let inner = solve_stscst(&inst, table_cap)?;
    let service = inner
        .served
        .iter()
        .map(|&c| {
            let cl = &clients[c];
            let d = inner.nodes.iter().map(|&h| tree.distance(cl.node, h)).fold(f64::INFINITY, f64::min);
            if d == 0.0 {
                0.0
            } else {
                cl.profit * d / cl.radius
            }
        })
        .sum();
    Ok(TscstSolution { inner, service, x })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path() -> RootedTree {
        RootedTree::with_costs(2, 0, &[(0, 1, 1)]).unwrap()
    }

    #[test]
    fn path_examples() {
        let cl = vec![TreeClient {
            node: 1,
            profit: 5.0,
            radius: 1.0,
        }];
        let inst = StscstInstance {
            tree: path(),
            clients: cl.clone(),
            b: 1,
            b_hat: 0,
            x: 1.0,
        };
        let s = solve_stscst(&inst, DEFAULT_TABLE_CAP).unwrap();
        assert_eq!((s.nodes.clone(), s.profit), (vec![0, 1], 5.0));
        let inst = StscstInstance { b: 0, ..inst };
        assert_eq!(solve_stscst(&inst, DEFAULT_TABLE_CAP).unwrap().profit, 0.0);
    }

    #[test]
    fn tscst_client_at_root() {
        let cl = [TreeClient {
            node: 0,
            profit: 3.0,
            radius: 1.0,
        }];
        let s = solve_tscst(&path(), &cl, 0, 1.0, 1.0, DEFAULT_TABLE_CAP).unwrap();
        assert_eq!((s.inner.profit, s.service), (3.0, 0.0));
        let z = solve_tscst(&path(), &cl, 0, 0.0, 1.0, DEFAULT_TABLE_CAP).unwrap();
        assert_eq!(z.inner.profit, 3.0);
    }

    #[test]
    fn cap_is_enforced() {
        let inst = StscstInstance {
            tree: path(),
            clients: vec![],
            b: 1000,
            b_hat: 1000,
            x: 1.0,
        };
        assert!(matches!(solve_stscst(&inst, 1000), Err(Error::CapExceeded(_))));
    }
}
