//! Exhaustive solvers for tiny instances. They are slow on purpose and
//! exist to anchor the approximation checks.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::mst_weight;
use crate::model::{Instance, MetricSpace, Schedule, TimedWalk, UNSERVED};
use crate::npcst::NpcstInstance;
use crate::num::leq;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub nodes: usize,
    pub clients: usize,
    pub repairmen: usize,
    /// Longest visit sequence considered when revisits are allowed.
    pub walk_len: usize,
    pub wall_clock: Option<Duration>,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            nodes: 6,
            clients: 4,
            repairmen: 2,
            walk_len: 8,
            wall_clock: None,
        }
    }
}

impl OracleBudget {
    fn check(&self, inst: &Instance) -> Result<()> {
        if inst.n() > self.nodes || inst.clients.len() > self.clients || inst.repairmen.len() > self.repairmen {
            return Err(Error::CapExceeded(format!(
                "oracle caps are {} nodes, {} clients, {} repairmen; instance has {}, {}, {}",
                self.nodes,
                self.clients,
                self.repairmen,
                inst.n(),
                inst.clients.len(),
                inst.repairmen.len()
            )));
        }
        Ok(())
    }
}

struct Clock(Option<(Instant, Duration)>);

impl Clock {
    fn new(limit: Option<Duration>) -> Self {
        Self(limit.map(|d| (Instant::now(), d)))
    }

    fn check(&self) -> Result<()> {
        match self.0 {
            Some((start, d)) if start.elapsed() > d => Err(Error::CapExceeded(format!("oracle exceeded {d:?}"))),
            _ => Ok(()),
        }
    }
}

/// Which visit sequences a repairman may follow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Walks {
    /// Distinct nodes after the depot. Sufficient for indirect service:
    /// skipping a repeated node only moves later visits earlier.
    Simple,
    /// Any sequence without immediate repeats, up to the budget's walk length.
    Revisits,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactSchedule {
    pub objective: f64,
    pub latencies: Vec<f64>,
    pub schedule: Schedule,
}

fn latencies_of(inst: &Instance, r: usize, seq: &[usize]) -> Vec<f64> {
    let rep = &inst.repairmen[r];
    let tw = TimedWalk::full_speed(r, seq.to_vec(), 0.0, rep.speed, &inst.metric);
    (0..inst.clients.len())
        .map(|c| {
            tw.nodes
                .iter()
                .zip(&tw.times)
                .map(|(&u, &t)| t.max(inst.client_reach_time(c, u)))
                .fold(UNSERVED, f64::min)
        })
        .collect()
}

/// Every reachable latency vector for one repairman, dominated ones removed.
fn repairman_options(inst: &Instance, r: usize, walks: Walks, walk_len: usize, clock: &Clock) -> Result<Vec<(Vec<f64>, Vec<usize>)>> {
    let rep = &inst.repairmen[r];
    let mut out: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    let mut seq = vec![rep.depot];
    let max_len = match walks {
        Walks::Simple => inst.n(),
        Walks::Revisits => walk_len.max(1),
    };
    fn rec(
        inst: &Instance,
        r: usize,
        walks: Walks,
        max_len: usize,
        seq: &mut Vec<usize>,
        out: &mut Vec<(Vec<f64>, Vec<usize>)>,
        clock: &Clock,
    ) -> Result<()> {
        clock.check()?;
        out.push((latencies_of(inst, r, seq), seq.clone()));
        if seq.len() >= max_len || inst.repairmen[r].speed <= 0.0 {
            return Ok(());
        }
        for u in 0..inst.n() {
            let ok = match walks {
                Walks::Simple => !seq.contains(&u),
                Walks::Revisits => *seq.last().unwrap() != u,
            };
            if ok {
                seq.push(u);
                rec(inst, r, walks, max_len, seq, out, clock)?;
                seq.pop();
            }
        }
        Ok(())
    }
    rec(inst, r, walks, max_len, &mut seq, &mut out, clock)?;
    // keep the first (shortest, lexicographically smallest) witness of each vector
    let mut kept: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for (v, s) in out {
        let dominated = kept.iter().any(|(k, _)| k.iter().zip(&v).all(|(a, b)| a <= b));
        if !dominated {
            kept.retain(|(k, _)| !v.iter().zip(k).all(|(a, b)| a <= b));
            kept.push((v, s));
        }
    }
    Ok(kept)
}

fn exact_schedule(inst: &Instance, budget: &OracleBudget, walks: Walks, agg: fn(&[f64]) -> f64) -> Result<ExactSchedule> {
    budget.check(inst)?;
    inst.validate()?;
    let clock = Clock::new(budget.wall_clock);
    let opts: Vec<_> = (0..inst.repairmen.len())
        .map(|r| repairman_options(inst, r, walks, budget.walk_len, &clock))
        .collect::<Result<_>>()?;
    let m = inst.clients.len();
    let mut best = (UNSERVED, vec![UNSERVED; m], vec![0usize; opts.len()]);
    let mut pick = vec![0usize; opts.len()];
    fn rec(
        opts: &[Vec<(Vec<f64>, Vec<usize>)>],
        i: usize,
        cur: &[f64],
        pick: &mut Vec<usize>,
        best: &mut (f64, Vec<f64>, Vec<usize>),
        agg: fn(&[f64]) -> f64,
    ) {
        if i == opts.len() {
            let v = agg(cur);
            if v < best.0 {
                *best = (v, cur.to_vec(), pick.clone());
            }
            return;
        }
        for (k, (lat, _)) in opts[i].iter().enumerate() {
            let next: Vec<f64> = cur.iter().zip(lat).map(|(a, b)| a.min(*b)).collect();
            pick[i] = k;
            rec(opts, i + 1, &next, pick, best, agg);
        }
    }
    rec(&opts, 0, &vec![UNSERVED; m], &mut pick, &mut best, agg);
    let walks = best
        .2
        .iter()
        .enumerate()
        .map(|(r, &k)| TimedWalk::full_speed(r, opts[r][k].1.clone(), 0.0, inst.repairmen[r].speed, &inst.metric))
        .collect();
    Ok(ExactSchedule {
        objective: if m == 0 { 0.0 } else { best.0 },
        latencies: best.1,
        schedule: Schedule {
            walks,
            assignments: vec![None; m],
        },
    })
}

fn sum(v: &[f64]) -> f64 {
    v.iter().sum()
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Minimum total indirect latency.
pub fn exact_sum_mr(inst: &Instance, budget: &OracleBudget) -> Result<ExactSchedule> {
    exact_schedule(inst, budget, Walks::Simple, sum)
}

/// Minimum largest indirect latency.
pub fn exact_max_mr(inst: &Instance, budget: &OracleBudget) -> Result<ExactSchedule> {
    exact_schedule(inst, budget, Walks::Simple, max)
}

/// The same searches over an explicit walk family, used to test that
/// simple walks lose nothing.
pub fn exact_sum_mr_over(inst: &Instance, budget: &OracleBudget, walks: Walks) -> Result<ExactSchedule> {
    exact_schedule(inst, budget, walks, sum)
}

pub fn exact_max_mr_over(inst: &Instance, budget: &OracleBudget, walks: Walks) -> Result<ExactSchedule> {
    exact_schedule(inst, budget, walks, max)
}

pub const NPCST_NODE_CAP: usize = 10;
pub const NPCST_CLIENT_CAP: usize = 12;

/// `dp[S][v]`: cheapest tree containing `v` that touches every group in
/// `S`. Groups are node sets; the metric must be complete and satisfy the
/// triangle inequality, so one relaxation per subset is enough.
fn group_steiner_table(metric: &MetricSpace, groups: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let n = metric.n();
    let k = groups.len();
    let mut dp = vec![vec![UNSERVED; n]; 1 << k];
    dp[0] = vec![0.0; n];
    for (i, g) in groups.iter().enumerate() {
        for v in 0..n {
            dp[1 << i][v] = g.iter().map(|&u| metric.d(v, u)).fold(UNSERVED, f64::min);
        }
    }
    for s in 1usize..(1 << k) {
        if s.count_ones() < 2 {
            continue;
        }
        let mut row = vec![UNSERVED; n];
        for (v, cell) in row.iter_mut().enumerate() {
            let mut a = (s - 1) & s;
            while a > 0 {
                if a < (s ^ a) {
                    *cell = cell.min(dp[a][v] + dp[s ^ a][v]);
                }
                a = (a - 1) & s;
            }
        }
        let relaxed: Vec<f64> = (0..n)
            .map(|v| (0..n).map(|u| row[u] + metric.d(u, v)).fold(UNSERVED, f64::min))
            .collect();
        dp[s] = relaxed;
    }
    dp
}

/// Largest profit of a tree through the root of cost at most the budget,
/// counting clients whose (unstretched) ball it touches.
pub fn exact_npcst(inst: &NpcstInstance) -> Result<f64> {
    let n = inst.metric.n();
    if n > NPCST_NODE_CAP || inst.clients.len() > NPCST_CLIENT_CAP {
        return Err(Error::CapExceeded(format!(
            "exact NPCST handles {NPCST_NODE_CAP} nodes and {NPCST_CLIENT_CAP} clients"
        )));
    }
    let groups: Vec<Vec<usize>> = (0..inst.clients.len())
        .map(|c| (0..n).filter(|&u| inst.in_ball(c, u, 1.0)).collect())
        .collect();
    let dp = group_steiner_table(inst.metric, &groups);
    let mut best = 0.0f64;
    for (s, row) in dp.iter().enumerate() {
        if leq(row[inst.root], inst.budget) {
            let p: f64 = (0..groups.len()).filter(|&i| s >> i & 1 == 1).map(|i| inst.clients[i].profit).sum();
            best = best.max(p);
        }
    }
    Ok(best)
}

/// The same optimum by enumerating node sets through the root and taking
/// their minimum spanning tree.
pub fn exact_npcst_by_node_sets(inst: &NpcstInstance) -> Result<f64> {
    let n = inst.metric.n();
    if n > NPCST_NODE_CAP {
        return Err(Error::CapExceeded(format!("node-set enumeration handles {NPCST_NODE_CAP} nodes")));
    }
    let mut best = 0.0f64;
    for mask in 0usize..(1 << n) {
        if mask >> inst.root & 1 == 0 {
            continue;
        }
        let nodes: Vec<usize> = (0..n).filter(|&u| mask >> u & 1 == 1).collect();
        if !leq(mst_weight(&nodes, |u, v| inst.metric.d(u, v)), inst.budget) {
            continue;
        }
        let p: f64 = (0..inst.clients.len())
            .filter(|&c| nodes.iter().any(|&u| inst.in_ball(c, u, 1.0)))
            .map(|c| inst.clients[c].profit)
            .sum();
        best = best.max(p);
    }
    Ok(best)
}

pub const COVER_TERMINAL_CAP: usize = 8;

/// Smallest possible longest tree when `roots.len()` trees, one through
/// each root, must together contain every terminal.
pub fn exact_minmax_cover(metric: &MetricSpace, roots: &[usize], terminals: &[usize]) -> Result<f64> {
    let t = terminals.len();
    if t > COVER_TERMINAL_CAP {
        return Err(Error::CapExceeded(format!("exact cover handles {COVER_TERMINAL_CAP} terminals")));
    }
    if roots.is_empty() {
        return Err(Error::Invalid("at least one root is needed".into()));
    }
    let groups: Vec<Vec<usize>> = terminals.iter().map(|&x| vec![x]).collect();
    let dp = group_steiner_table(metric, &groups);
    let full = (1usize << t) - 1;
    // f[S]: best max cost covering S with the roots handled so far
    let mut f = vec![UNSERVED; 1 << t];
    for (s, cell) in f.iter_mut().enumerate() {
        *cell = dp[s][roots[0]];
    }
    for &r in &roots[1..] {
        let mut g = f.clone();
        for s in 0..=full {
            let mut a = s;
            loop {
                g[s] = g[s].min(dp[a][r].max(f[s ^ a]));
                if a == 0 {
                    break;
                }
                a = (a - 1) & s;
            }
        }
        f = g;
    }
    Ok(f[full])
}

pub const BPCST_CENTER_CAP: usize = 12;

/// Largest node profit of a tree through `root` of cost at most `budget`
/// whose nodes are among `centers`.
pub fn exact_bpcst(metric: &MetricSpace, centers: &[usize], profits: &[f64], root: usize, budget: f64) -> Result<(f64, Vec<usize>)> {
    let k = centers.len();
    if k > BPCST_CENTER_CAP {
        return Err(Error::CapExceeded(format!("exact BPCST handles {BPCST_CENTER_CAP} centers")));
    }
    let Some(ri) = centers.iter().position(|&c| c == root) else {
        return Err(Error::Invalid("root must be a center".into()));
    };
    let mut best = (profits[ri], vec![root]);
    for mask in 0usize..(1 << k) {
        if mask >> ri & 1 == 0 {
            continue;
        }
        let idx: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
        let p: f64 = idx.iter().map(|&i| profits[i]).sum();
        if p <= best.0 {
            continue;
        }
        let nodes: Vec<usize> = idx.iter().map(|&i| centers[i]).collect();
        if leq(mst_weight(&nodes, |u, v| metric.d(u, v)), budget) {
            best = (p, nodes);
        }
    }
    best.1.sort_unstable();
    Ok(best)
}
