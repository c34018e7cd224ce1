//! The path-variable LP for Sum-MR and its relaxation with stretched
//! paths/balls (`mu`) and several paths per repairman per stamp (`omega`).
//!
//! Variables are `x[r,p,t]` over walk classes (walks grouped by their set
//! of visited nodes) and `y[c,t]` over the time grid. Rows:
//!
//! * `sum_p x[r,p,t] <= omega` for every repairman and stamp,
//! * `sum_{p hits ball(c, mu v'_c t)} x[r,p,t] - sum_{t' <= t} y[c,t'] >= 0`,
//! * `sum_t y[c,t] >= 1`,
//!
//! minimizing `sum t y[c,t]`. The LP is solved by column generation: the
//! pricing problem for `(r,t)` asks for a walk from `r`'s depot of length
//! at most `mu v_r t` collecting the most dual profit, which is exactly a
//! neighborhood prize-collecting Steiner tree problem.

pub mod simplex;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invariant, Error, Result};
use crate::graph;
use crate::model::{Instance, TimeGrid};
use crate::npcst::{NpcstClient, NpcstInstance, NpcstSolver};
use crate::num::{leq, EPS};
use simplex::{solve_lp, LpProblem, Sense};

/// All walks from one depot that visit the same node set, represented by
/// a shortest one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathClass {
    pub repairman: usize,
    /// Sorted, always contains the depot.
    pub visited: Vec<usize>,
    pub length: f64,
    /// Node sequence starting at the depot.
    pub walk: Vec<usize>,
}

impl PathClass {
    pub fn depot_only(inst: &Instance, r: usize) -> Self {
        let depot = inst.repairmen[r].depot;
        Self {
            repairman: r,
            visited: vec![depot],
            length: 0.0,
            walk: vec![depot],
        }
    }

    pub fn from_walk(inst: &Instance, r: usize, walk: Vec<usize>) -> Self {
        let visited: BTreeSet<usize> = walk.iter().copied().collect();
        Self {
            repairman: r,
            length: graph::walk_length(&inst.metric, &walk),
            visited: visited.into_iter().collect(),
            walk,
        }
    }

    /// Whether the class reaches the neighborhood of client `c` for time `t`.
    pub fn hits(&self, inst: &Instance, c: usize, t: f64) -> bool {
        self.visited.iter().any(|&u| inst.in_ball(c, t, u))
    }
}

/// Held-Karp over subsets: for every node subset reachable within `budget`,
/// the shortest walk from `r`'s depot visiting all of it. Sorted by length,
/// then by visited set.
pub fn enumerate_path_classes(inst: &Instance, r: usize, budget: f64, node_cap: usize) -> Result<Vec<PathClass>> {
    let n = inst.n();
    if n > node_cap || n > 25 {
        return Err(Error::CapExceeded(format!(
            "exact enumeration allows at most {} nodes, instance has {n}; use oracle mode",
            node_cap.min(25)
        )));
    }
    let depot = inst.repairmen[r].depot;
    let others: Vec<usize> = (0..n).filter(|&u| u != depot).collect();
    let k = others.len();
    let full = 1usize << k;
    let d = |a: usize, b: usize| inst.metric.d(a, b);
    let mut dp = vec![f64::INFINITY; full * k.max(1)];
    let mut parent = vec![usize::MAX; full * k.max(1)];
    for j in 0..k {
        dp[(1 << j) * k + j] = d(depot, others[j]);
    }
    for mask in 1..full {
        for j in 0..k {
            let cur = dp[mask * k + j];
            if mask & (1 << j) == 0 || !cur.is_finite() {
                continue;
            }
            for l in 0..k {
                if mask & (1 << l) != 0 {
                    continue;
                }
                let nm = mask | (1 << l);
                let alt = cur + d(others[j], others[l]);
                if alt < dp[nm * k + l] {
                    dp[nm * k + l] = alt;
                    parent[nm * k + l] = j;
                }
            }
        }
    }
    let mut out = Vec::new();
    for mask in 0..full {
        let (len, end) = if mask == 0 {
            (0.0, usize::MAX)
        } else {
            (0..k)
                .filter(|&j| mask & (1 << j) != 0)
                .map(|j| (dp[mask * k + j], j))
                .fold((f64::INFINITY, usize::MAX), |a, b| if b.0 < a.0 { b } else { a })
        };
        if !leq(len, budget) {
            continue;
        }
        let mut walk = Vec::new();
        let (mut m, mut j) = (mask, end);
        while m != 0 {
            walk.push(others[j]);
            let p = parent[m * k + j];
            m &= !(1 << j);
            j = p;
        }
        walk.push(depot);
        walk.reverse();
        let mut visited: Vec<usize> = walk.clone();
        visited.sort_unstable();
        out.push(PathClass {
            repairman: r,
            visited,
            length: len,
            walk,
        });
    }
    out.sort_by(|a, b| a.length.total_cmp(&b.length).then_with(|| a.visited.cmp(&b.visited)));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Column {
    X { repairman: usize, class: usize, stamp: usize },
    Y { client: usize, stamp: usize },
}

/// Explicit LP over a fixed pool of classes.
pub struct PlpModel {
    pub lp: LpProblem,
    pub columns: Vec<Column>,
    /// Row of `sum_p x[r,p,t] <= omega`, indexed `[r][stamp]`.
    pub cap_rows: Vec<Vec<usize>>,
    /// Row of the coverage constraint, indexed `[c][stamp]`.
    pub cover_rows: Vec<Vec<usize>>,
    /// Row of `sum_t y[c,t] >= 1`.
    pub demand_rows: Vec<usize>,
}

/// Whether class `p` may be used at stamp `t` under stretch `mu`.
pub fn fits(inst: &Instance, p: &PathClass, t: f64, mu: f64) -> bool {
    leq(p.length, mu * inst.repairmen[p.repairman].speed * t)
}

pub fn build_plp(inst: &Instance, grid: &TimeGrid, classes: &[PathClass], mu: f64, omega: f64) -> PlpModel {
    let (k, m, q) = (inst.repairmen.len(), inst.clients.len(), grid.len());
    let mut lp = LpProblem::default();
    let mut columns = Vec::new();
    let mut y_var = vec![vec![0usize; q]; m];
    for (c, yv) in y_var.iter_mut().enumerate() {
        for (s, v) in yv.iter_mut().enumerate() {
            *v = lp.add_var(grid.stamps[s]);
            columns.push(Column::Y { client: c, stamp: s });
        }
    }
    let mut cap_terms = vec![vec![Vec::new(); q]; k];
    let mut cover_terms = vec![vec![Vec::new(); q]; m];
    for (id, p) in classes.iter().enumerate() {
        for s in 0..q {
            let t = grid.stamps[s];
            if !fits(inst, p, t, mu) {
                continue;
            }
            let v = lp.add_var(0.0);
            columns.push(Column::X {
                repairman: p.repairman,
                class: id,
                stamp: s,
            });
            cap_terms[p.repairman][s].push((v, 1.0));
            for (c, terms) in cover_terms.iter_mut().enumerate() {
                if p.hits(inst, c, mu * t) {
                    terms[s].push((v, 1.0));
                }
            }
        }
    }
    let cap_rows = cap_terms
        .into_iter()
        .map(|per_r| per_r.into_iter().map(|terms| lp.add_row(terms, Sense::Le, omega)).collect())
        .collect();
    let cover_rows = cover_terms
        .into_iter()
        .enumerate()
        .map(|(c, per_c)| {
            per_c
                .into_iter()
                .enumerate()
                .map(|(s, mut terms)| {
                    terms.extend((0..=s).map(|s2| (y_var[c][s2], -1.0)));
                    lp.add_row(terms, Sense::Ge, 0.0)
                })
                .collect()
        })
        .collect();
    let demand_rows = (0..m)
        .map(|c| lp.add_row((0..q).map(|s| (y_var[c][s], 1.0)).collect(), Sense::Ge, 1.0))
        .collect();
    PlpModel {
        lp,
        columns,
        cap_rows,
        cover_rows,
        demand_rows,
    }
}

/// Dual multipliers. `beta` follows the convention in which a column for
/// `(r,t)` prices out when its collected `theta` exceeds `beta[r][t]/omega`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualValues {
    pub lambda: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
}

impl DualValues {
    fn from_lp(model: &PlpModel, duals: &[f64], omega: f64) -> Self {
        Self {
            lambda: model.demand_rows.iter().map(|&i| duals[i].max(0.0)).collect(),
            beta: model
                .cap_rows
                .iter()
                .map(|rows| rows.iter().map(|&i| (-duals[i]).max(0.0) * omega).collect())
                .collect(),
            theta: model
                .cover_rows
                .iter()
                .map(|rows| rows.iter().map(|&i| duals[i].max(0.0)).collect())
                .collect(),
        }
    }

    pub fn objective(&self) -> f64 {
        self.lambda.iter().sum::<f64>() - self.beta.iter().flatten().sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalSolution {
    pub mu: f64,
    pub omega: f64,
    pub stamps: Vec<f64>,
    pub classes: Vec<PathClass>,
    /// `(repairman, class, stamp) -> value`, positive entries only.
    pub x: BTreeMap<(usize, usize, usize), f64>,
    /// `y[c][stamp]`.
    pub y: Vec<Vec<f64>>,
    pub objective: f64,
}

impl FractionalSolution {
    /// `sum_{t' <= stamps[s]} y[c][t']`.
    pub fn y_prefix(&self, c: usize, s: usize) -> f64 {
        self.y[c][..=s].iter().sum()
    }
}

/// Checks every relaxed constraint within absolute tolerance `1e-9`
/// (scaled by the row's magnitude). Returns the first violation.
pub fn check_rplp(inst: &Instance, sol: &FractionalSolution) -> Result<()> {
    let tol = 1e-7;
    let q = sol.stamps.len();
    let mut load = vec![vec![0.0; q]; inst.repairmen.len()];
    for (&(r, p, s), &v) in &sol.x {
        if v < -tol {
            return Err(invariant("rplp-nonnegative", format!("x[{r},{p},{s}] = {v}")));
        }
        let class = &sol.classes[p];
        if class.repairman != r || !fits(inst, class, sol.stamps[s], sol.mu) {
            return Err(invariant("rplp-path-budget", format!("class {p} not usable by {r} at stamp {s}")));
        }
        load[r][s] += v;
    }
    for (r, row) in load.iter().enumerate() {
        for (s, &l) in row.iter().enumerate() {
            if l > sol.omega + tol {
                return Err(invariant("rplp-capacity", format!("repairman {r} stamp {s}: {l} > {}", sol.omega)));
            }
        }
    }
    for c in 0..inst.clients.len() {
        if sol.y[c].iter().any(|&v| v < -tol) {
            return Err(invariant("rplp-nonnegative", format!("negative y for client {c}")));
        }
        for s in 0..q {
            let t = sol.stamps[s];
            let cover: f64 = sol
                .x
                .iter()
                .filter(|(&(_, p, s2), _)| s2 == s && sol.classes[p].hits(inst, c, sol.mu * t))
                .map(|(_, v)| v)
                .sum();
            let need = sol.y_prefix(c, s);
            if cover < need - tol {
                return Err(invariant("rplp-coverage", format!("client {c} stamp {s}: {cover} < {need}")));
            }
        }
        let total: f64 = sol.y[c].iter().sum();
        if total < 1.0 - tol {
            return Err(invariant("rplp-demand", format!("client {c}: sum y = {total}")));
        }
    }
    Ok(())
}

fn extract(model: &PlpModel, x: &[f64], inst: &Instance, grid: &TimeGrid, classes: Vec<PathClass>, mu: f64, omega: f64, objective: f64) -> FractionalSolution {
    let mut xs = BTreeMap::new();
    let mut y = vec![vec![0.0; grid.len()]; inst.clients.len()];
    for (j, col) in model.columns.iter().enumerate() {
        match *col {
            Column::X { repairman, class, stamp } if x[j] > EPS => {
                xs.insert((repairman, class, stamp), x[j]);
            }
            Column::Y { client, stamp } => y[client][stamp] = x[j],
            _ => {}
        }
    }
    FractionalSolution {
        mu,
        omega,
        stamps: grid.stamps.clone(),
        classes,
        x: xs,
        y,
        objective,
    }
}

/// Solves the explicit LP over a fixed class pool.
pub fn solve_plp_with_classes(inst: &Instance, grid: &TimeGrid, classes: Vec<PathClass>, mu: f64, omega: f64) -> Result<FractionalSolution> {
    let model = build_plp(inst, grid, &classes, mu, omega);
    let sol = solve_lp(&model.lp)?;
    Ok(extract(&model, &sol.x, inst, grid, classes, mu, omega, sol.objective))
}

/// Source of improving columns.
pub trait Pricer: Sync {
    /// Best class for repairman `r` at stamp time `t` given per-client
    /// profits `theta`, measured with balls stretched by `mu`. Returns the
    /// class and its profit.
    fn best_class(&self, inst: &Instance, r: usize, t: f64, theta: &[f64], mu: f64) -> Result<Option<(PathClass, f64)>>;

    /// Whether `best_class` is exact, so a Lagrangian lower bound is valid.
    fn exact(&self) -> bool;
}

/// Scans every enumerated class.
pub struct ExactPricer {
    pub classes: Vec<Vec<PathClass>>,
}

impl ExactPricer {
    pub fn new(inst: &Instance, grid: &TimeGrid, mu: f64, node_cap: usize) -> Result<Self> {
        let classes = (0..inst.repairmen.len())
            .map(|r| enumerate_path_classes(inst, r, mu * inst.repairmen[r].speed * grid.last(), node_cap))
            .collect::<Result<_>>()?;
        Ok(Self { classes })
    }
}

pub fn class_profit(inst: &Instance, p: &PathClass, t: f64, theta: &[f64], mu: f64) -> f64 {
    theta
        .iter()
        .enumerate()
        .filter(|&(c, &th)| th > 0.0 && p.hits(inst, c, mu * t))
        .map(|(_, th)| th)
        .sum()
}

impl Pricer for ExactPricer {
    fn best_class(&self, inst: &Instance, r: usize, t: f64, theta: &[f64], mu: f64) -> Result<Option<(PathClass, f64)>> {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in self.classes[r].iter().enumerate() {
            if !fits(inst, p, t, mu) {
                continue;
            }
            let profit = class_profit(inst, p, t, theta, mu);
            if best.is_none_or(|(_, b)| profit > b + EPS) {
                best = Some((i, profit));
            }
        }
        Ok(best.map(|(i, pr)| (self.classes[r][i].clone(), pr)))
    }

    fn exact(&self) -> bool {
        true
    }
}

/// Prices with a neighborhood prize-collecting Steiner tree solver: the
/// returned tree is walked depth-first from the depot.
pub struct NpcstPricer<S> {
    pub solver: S,
}

impl<S: NpcstSolver> Pricer for NpcstPricer<S> {
    fn best_class(&self, inst: &Instance, r: usize, t: f64, theta: &[f64], mu: f64) -> Result<Option<(PathClass, f64)>> {
        let clients: Vec<NpcstClient> = inst
            .clients
            .iter()
            .zip(theta)
            .filter(|(_, &th)| th > EPS)
            .map(|(c, &th)| NpcstClient {
                node: c.start,
                profit: th,
                radius: c.speed * t,
            })
            .collect();
        if clients.is_empty() {
            return Ok(None);
        }
        let rep = inst.repairmen[r];
        let npcst = NpcstInstance {
            metric: &inst.metric,
            root: rep.depot,
            clients,
            budget: rep.speed * t,
        };
        let sol = self.solver.solve(&npcst)?;
        let walk = graph::preorder_walk(rep.depot, &sol.tree.edges);
        let class = PathClass::from_walk(inst, r, walk);
        if !fits(inst, &class, t, mu) {
            return Err(invariant(
                "pricing-walk-budget",
                format!("oracle walk of length {} exceeds {mu} * {} * {t}", class.length, rep.speed),
            ));
        }
        let profit = class_profit(inst, &class, t, theta, mu);
        Ok(Some((class, profit)))
    }

    fn exact(&self) -> bool {
        false
    }
}

/// Improving class for `(r, t)`: one whose collected `theta` exceeds
/// `beta/omega`, or `None`.
pub fn price(duals: &DualValues, inst: &Instance, r: usize, s: usize, t: f64, pricer: &dyn Pricer, mu: f64, omega: f64) -> Result<Option<PathClass>> {
    let theta: Vec<f64> = duals.theta.iter().map(|row| row[s]).collect();
    if theta.iter().all(|&th| th <= EPS) {
        return Ok(None);
    }
    let threshold = duals.beta[r][s] / omega;
    Ok(pricer
        .best_class(inst, r, t, &theta, mu)?
        .filter(|(_, profit)| *profit > threshold + 1e-7)
        .map(|(p, _)| p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnGenerationStats {
    pub rounds: usize,
    pub converged: bool,
    pub objective_history: Vec<f64>,
    /// Lagrangian lower bound on the LP optimum (exact pricing only).
    pub lower_bound: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct LpConfig {
    pub mu: f64,
    pub omega: f64,
    pub epsilon: f64,
    pub max_rounds: usize,
}

/// Column generation for the relaxed LP. The initial pool holds, per
/// repairman, the depot-only class and a depth-first walk of a minimum
/// spanning tree, which keeps the master feasible at the last stamp.
pub fn solve_sum_mr_lp(inst: &Instance, grid: &TimeGrid, pricer: &dyn Pricer, cfg: &LpConfig) -> Result<(FractionalSolution, ColumnGenerationStats)> {
    let (mu, omega) = (cfg.mu, cfg.omega);
    if !(mu >= 1.0 && omega >= 1.0) {
        return Err(Error::Invalid(format!("need mu >= 1 and omega >= 1, got {mu}, {omega}")));
    }
    let all: Vec<usize> = (0..inst.n()).collect();
    let mut pool: Vec<PathClass> = Vec::new();
    let mut seen: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    let mut push = |pool: &mut Vec<PathClass>, p: PathClass| {
        if seen.insert((p.repairman, p.visited.clone())) {
            pool.push(p);
            true
        } else {
            false
        }
    };
    for r in 0..inst.repairmen.len() {
        push(&mut pool, PathClass::depot_only(inst, r));
        let mut order = all.clone();
        order.retain(|&u| u != inst.repairmen[r].depot);
        order.insert(0, inst.repairmen[r].depot);
        let edges = graph::mst_edges(&order, |u, v| inst.metric.d(u, v));
        let walk = graph::preorder_walk(inst.repairmen[r].depot, &edges);
        push(&mut pool, PathClass::from_walk(inst, r, walk));
    }
    let mut history = Vec::new();
    let mut lower_bound: Option<f64> = None;
    for round in 1..=cfg.max_rounds {
        let model = build_plp(inst, grid, &pool, mu, omega);
        let lp = solve_lp(&model.lp)?;
        if let Some(&prev) = history.last() {
            if lp.objective > prev + 1e-7 * (1.0f64).max(prev) {
                return Err(invariant("column-generation-monotone", format!("{} after {prev}", lp.objective)));
            }
        }
        history.push(lp.objective);
        let duals = DualValues::from_lp(&model, &lp.duals, omega);
        let jobs: Vec<(usize, usize)> = (0..inst.repairmen.len())
            .flat_map(|r| (0..grid.len()).map(move |s| (r, s)))
            .collect();
        let found: Vec<Result<Option<(PathClass, f64, f64)>>> = jobs
            .par_iter()
            .map(|&(r, s)| {
                let t = grid.stamps[s];
                let theta: Vec<f64> = duals.theta.iter().map(|row| row[s]).collect();
                if theta.iter().all(|&th| th <= EPS) {
                    return Ok(None);
                }
                Ok(pricer
                    .best_class(inst, r, t, &theta, mu)?
                    .map(|(p, profit)| (p, profit, duals.beta[r][s] / omega)))
            })
            .collect();
        let mut added = false;
        let mut gap = 0.0;
        for item in found {
            if let Some((p, profit, threshold)) = item? {
                gap += omega * (profit - threshold).max(0.0);
                if profit > threshold + 1e-7 {
                    added |= push(&mut pool, p);
                }
            }
        }
        if pricer.exact() {
            let lb = lp.objective - gap;
            lower_bound = Some(lower_bound.map_or(lb, |b: f64| b.max(lb)));
        }
        let close = lower_bound.is_some_and(|lb| lp.objective <= (1.0 + cfg.epsilon) * lb + 1e-9);
        if !added || (cfg.epsilon > 0.0 && close) {
            let sol = extract(&model, &lp.x, inst, grid, pool, mu, omega, lp.objective);
            return Ok((
                sol,
                ColumnGenerationStats {
                    rounds: round,
                    converged: true,
                    objective_history: history,
                    lower_bound,
                },
            ));
        }
    }
    // out of rounds: the last master solution is still feasible
    let model = build_plp(inst, grid, &pool, mu, omega);
    let lp = solve_lp(&model.lp)?;
    history.push(lp.objective);
    let sol = extract(&model, &lp.x, inst, grid, pool, mu, omega, lp.objective);
    Ok((
        sol,
        ColumnGenerationStats {
            rounds: cfg.max_rounds,
            converged: false,
            objective_history: history,
            lower_bound,
        },
    ))
}
