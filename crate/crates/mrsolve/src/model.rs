//! Instances, walks, schedules and the two service semantics.

use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{invariant, Error, Result};
use crate::graph;
use crate::num::{approx_eq, ceil_log2, leq, tol};

/// Latency of a client nobody serves.
pub const UNSERVED: f64 = f64::INFINITY;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSpace {
    n: usize,
    dist: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Diagonal(usize),
    Negative(usize, usize),
    Asymmetric(usize, usize),
    Triangle(usize, usize, usize),
}

/// Every diagonal, sign, symmetry and triangle violation of a square matrix.
/// `Triangle(u, v, w)` means `d(u,w) > d(u,v) + d(v,w)`.
///
/// Generic so the file layer can run it on exact rationals and the solver
/// on floats. `T::default()` must be zero.
pub fn validate_metric<T>(rows: &[Vec<T>]) -> Result<Vec<Violation>>
where
    T: PartialOrd + Clone + Add<Output = T> + Default,
{
    let n = rows.len();
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(Error::Invalid(format!(
            "distance matrix is not square: row {bad} has {} entries, expected {n}",
            rows[bad].len()
        )));
    }
    let zero = T::default();
    let mut out = Vec::new();
    for u in 0..n {
        if rows[u][u] != zero {
            out.push(Violation::Diagonal(u));
        }
        for v in 0..n {
            if rows[u][v] < zero {
                out.push(Violation::Negative(u, v));
            }
            if u < v && rows[u][v] != rows[v][u] {
                out.push(Violation::Asymmetric(u, v));
            }
        }
    }
    for u in 0..n {
        for v in 0..n {
            for w in 0..n {
                if u == v || v == w || u == w {
                    continue;
                }
                if rows[u][w] > rows[u][v].clone() + rows[v][w].clone() {
                    out.push(Violation::Triangle(u, v, w));
                }
            }
        }
    }
    Ok(out)
}

impl MetricSpace {
    /// Builds a metric, rejecting anything that is not one up to float
    /// tolerance.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Invalid("metric needs at least one node".into()));
        }
        let mut m = Self::unchecked(rows)?;
        for u in 0..n {
            if !m.dist[u * n + u].is_finite() || m.dist[u * n + u] != 0.0 {
                return Err(Error::Invalid(format!("d({u},{u}) must be 0")));
            }
            for v in 0..n {
                let duv = m.d(u, v);
                if !duv.is_finite() || duv < 0.0 {
                    return Err(Error::Invalid(format!("d({u},{v}) = {duv} is not a finite non-negative number")));
                }
                if !approx_eq(duv, m.d(v, u)) {
                    return Err(Error::Invalid(format!("asymmetric distance between {u} and {v}")));
                }
            }
        }
        for u in 0..n {
            for v in 0..n {
                for w in 0..n {
                    if !leq(m.d(u, w), m.d(u, v) + m.d(v, w)) {
                        return Err(Error::Invalid(format!("triangle inequality fails for ({u},{v},{w})")));
                    }
                }
            }
        }
        // symmetrize exactly so downstream code never sees d(u,v) != d(v,u)
        for u in 0..n {
            for v in u + 1..n {
                let x = m.dist[u * n + v];
                m.dist[v * n + u] = x;
            }
        }
        Ok(m)
    }

    fn unchecked(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut dist = Vec::with_capacity(n * n);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != n {
                return Err(Error::Invalid(format!("distance row {i} has wrong length")));
            }
            dist.extend(r);
        }
        Ok(Self { n, dist })
    }

    /// Builds from a closure without validation. Used for metrics that are
    /// metrics by construction (Euclidean, shortest-path closures).
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut dist = vec![0.0; n * n];
        for u in 0..n {
            for v in u + 1..n {
                let x = f(u, v);
                dist[u * n + v] = x;
                dist[v * n + u] = x;
            }
        }
        Self { n, dist }
    }

    pub fn euclidean(points: &[(f64, f64)]) -> Self {
        Self::from_fn(points.len(), |u, v| {
            let (a, b) = (points[u], points[v]);
            (a.0 - b.0).hypot(a.1 - b.1)
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self, u: usize, v: usize) -> f64 {
        self.dist[u * self.n + v]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            dist: self.dist.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_positive(&self) -> Option<f64> {
        self.dist.iter().cloned().filter(|&x| x > 0.0).min_by(f64::total_cmp)
    }

    pub fn mst_weight(&self) -> f64 {
        let all: Vec<usize> = (0..self.n).collect();
        graph::mst_weight(&all, |u, v| self.d(u, v))
    }

    /// Distance from `u` to the closest node of `set` (infinite when empty).
    pub fn dist_to_set(&self, u: usize, set: &[usize]) -> f64 {
        set.iter().map(|&v| self.d(u, v)).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Repairman {
    pub id: usize,
    pub depot: usize,
    pub speed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Client {
    pub id: usize,
    pub start: usize,
    pub speed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub metric: MetricSpace,
    pub repairmen: Vec<Repairman>,
    pub clients: Vec<Client>,
    /// Planar coordinates, present only for Euclidean instances.
    pub coords: Option<Vec<(f64, f64)>>,
}

impl Instance {
    /// `repairmen` as `(depot, speed)`, `clients` as `(start, speed)`; ids are
    /// positions in the lists.
    pub fn new(metric: MetricSpace, repairmen: &[(usize, f64)], clients: &[(usize, f64)]) -> Result<Self> {
        let inst = Self {
            repairmen: repairmen
                .iter()
                .enumerate()
                .map(|(id, &(depot, speed))| Repairman { id, depot, speed })
                .collect(),
            clients: clients
                .iter()
                .enumerate()
                .map(|(id, &(start, speed))| Client { id, start, speed })
                .collect(),
            metric,
            coords: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_coords(mut self, coords: Vec<(f64, f64)>) -> Result<Self> {
        if coords.len() != self.metric.n() {
            return Err(Error::Invalid("coordinate count differs from node count".into()));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.metric.n();
        if self.repairmen.is_empty() {
            return Err(Error::Invalid("instance needs at least one repairman".into()));
        }
        for r in &self.repairmen {
            if r.depot >= n {
                return Err(Error::Invalid(format!("repairman {} depot {} out of range", r.id, r.depot)));
            }
            if !(r.speed > 0.0 && r.speed.is_finite()) {
                return Err(Error::Invalid(format!("repairman {} speed must be positive", r.id)));
            }
        }
        for c in &self.clients {
            if c.start >= n {
                return Err(Error::Invalid(format!("client {} start {} out of range", c.id, c.start)));
            }
            if !(c.speed >= 0.0 && c.speed.is_finite()) {
                return Err(Error::Invalid(format!("client {} speed must be non-negative", c.id)));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.metric.n()
    }

    pub fn max_speed(&self) -> f64 {
        self.repairmen
            .iter()
            .map(|r| r.speed)
            .chain(self.clients.iter().map(|c| c.speed))
            .fold(0.0, f64::max)
    }

    pub fn min_repairman_speed(&self) -> f64 {
        self.repairmen.iter().map(|r| r.speed).fold(f64::INFINITY, f64::min)
    }

    /// Time client `c` needs to reach node `u` (infinite if it cannot move).
    pub fn client_reach_time(&self, c: usize, u: usize) -> f64 {
        let cl = &self.clients[c];
        if u == cl.start {
            0.0
        } else {
            let d = self.metric.d(cl.start, u);
            if d == 0.0 {
                0.0
            } else if cl.speed == 0.0 {
                UNSERVED
            } else {
                d / cl.speed
            }
        }
    }

    /// Whether node `u` lies in the neighborhood of client `c` for time `t`.
    #[inline]
    pub fn in_ball(&self, c: usize, t: f64, u: usize) -> bool {
        let cl = &self.clients[c];
        u == cl.start || leq(self.metric.d(cl.start, u), cl.speed * t)
    }
}

/// Multiplies every distance by twice the largest agent speed. Returns the
/// scaled instance and the factor; latencies of the scaled instance divided
/// by the factor are latencies of the original.
pub fn scale_instance(inst: &Instance) -> Result<(Instance, f64)> {
    let mv = inst.max_speed();
    if mv <= 0.0 {
        return Err(Error::Invalid("all agent speeds are zero".into()));
    }
    let factor = 2.0 * mv;
    let mut out = inst.clone();
    out.metric = inst.metric.scaled(factor);
    if let Some(c) = &inst.coords {
        out.coords = Some(c.iter().map(|&(x, y)| (x * factor, y * factor)).collect());
    }
    Ok((out, factor))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub stamps: Vec<f64>,
    pub horizon: f64,
}

impl TimeGrid {
    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.stamps.last().expect("grid is never empty")
    }
}

/// Stamps `1, 2, ..., 2^E` with `E = ceil(log T) + ceil(ceil(log m)/2) + 1`
/// and `T = 2 MST / min repairman speed`. `T < 1` (everything coincident)
/// counts as `ceil(log T) = 0`.
pub fn build_time_grid(inst: &Instance) -> TimeGrid {
    let horizon = 2.0 * inst.metric.mst_weight() / inst.min_repairman_speed();
    let m = inst.clients.len().max(1);
    let log_m = ceil_log2(m as f64);
    let e = ceil_log2(horizon) + log_m.div_ceil(2) + 1;
    TimeGrid {
        stamps: (0..=e).map(|i| (1u64 << i) as f64).collect(),
        horizon,
    }
}

/// Nodes reachable by client `c` within time `t`, in increasing id order.
pub fn ball(inst: &Instance, c: usize, t: f64) -> Vec<usize> {
    (0..inst.n()).filter(|&u| inst.in_ball(c, t, u)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Walk {
    pub owner: usize,
    pub nodes: Vec<usize>,
}

impl Walk {
    pub fn length(&self, metric: &MetricSpace) -> f64 {
        graph::walk_length(metric, &self.nodes)
    }
}

/// A walk with the time at which each entry is reached. A repeated node
/// means the repairman waits there between the two times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedWalk {
    pub owner: usize,
    pub nodes: Vec<usize>,
    pub times: Vec<f64>,
}

impl TimedWalk {
    /// Travels `nodes` at full speed, leaving the first node at `start`.
    pub fn full_speed(owner: usize, nodes: Vec<usize>, start: f64, speed: f64, metric: &MetricSpace) -> Self {
        let mut times = Vec::with_capacity(nodes.len());
        let mut t = start;
        for (i, &u) in nodes.iter().enumerate() {
            if i > 0 {
                t += metric.d(nodes[i - 1], u) / speed;
            }
            times.push(t);
        }
        Self { owner, nodes, times }
    }

    pub fn push(&mut self, node: usize, time: f64) {
        self.nodes.push(node);
        self.times.push(time);
    }

    /// Whether the repairman stands at `u` at time `t` (waiting allowed,
    /// and it stays at its final node forever).
    pub fn present_at(&self, u: usize, t: f64) -> bool {
        let k = self.nodes.len();
        (0..k).any(|i| {
            self.nodes[i] == u
                && (approx_eq(self.times[i], t)
                    || (i + 1 < k
                        && self.nodes[i + 1] == u
                        && self.times[i] - tol(t) <= t
                        && t <= self.times[i + 1] + tol(t))
                    || (i + 1 == k && self.times[i] - tol(t) <= t))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub node: usize,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub walks: Vec<TimedWalk>,
    /// Meeting point per client; only perfect service needs these.
    pub assignments: Vec<Option<Assignment>>,
}

/// Which visit served a client.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServiceEvent {
    pub walk: usize,
    pub index: usize,
    pub node: usize,
    pub visit_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub latencies: Vec<f64>,
    pub total: f64,
    pub served_by: Vec<Option<ServiceEvent>>,
}

impl Evaluation {
    pub fn max(&self) -> f64 {
        self.latencies.iter().cloned().fold(0.0, f64::max)
    }

    pub fn all_served(&self) -> bool {
        self.latencies.iter().all(|l| l.is_finite())
    }
}

/// Checks owners, node ranges, non-decreasing times and speed limits.
pub fn validate_timing(inst: &Instance, sched: &Schedule) -> Result<()> {
    for (w, walk) in sched.walks.iter().enumerate() {
        let Some(rep) = inst.repairmen.get(walk.owner) else {
            return Err(Error::Invalid(format!("walk {w} has unknown owner {}", walk.owner)));
        };
        if walk.nodes.len() != walk.times.len() {
            return Err(Error::Invalid(format!("walk {w}: node and time lists differ in length")));
        }
        if walk.nodes.first().is_some_and(|&u| u != rep.depot) {
            return Err(Error::Invalid(format!("walk {w} does not start at the depot of repairman {}", rep.id)));
        }
        if walk.times.first().is_some_and(|&t| t < -tol(0.0)) {
            return Err(Error::Invalid(format!("walk {w} starts before time 0")));
        }
        for i in 0..walk.nodes.len() {
            if walk.nodes[i] >= inst.n() {
                return Err(Error::Invalid(format!("walk {w} visits unknown node {}", walk.nodes[i])));
            }
            if i > 0 {
                let need = inst.metric.d(walk.nodes[i - 1], walk.nodes[i]) / rep.speed;
                let have = walk.times[i] - walk.times[i - 1];
                if !leq(need, have) {
                    return Err(Error::Invalid(format!(
                        "walk {w} step {i}: {have} time units for a leg needing {need}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Latency of each client when it may be served by reaching any node some
/// repairman visited no later than the client gets there.
pub fn evaluate_indirect(inst: &Instance, sched: &Schedule) -> Result<Evaluation> {
    validate_timing(inst, sched)?;
    let m = inst.clients.len();
    let mut latencies = vec![UNSERVED; m];
    let mut served_by = vec![None; m];
    for c in 0..m {
        for (w, walk) in sched.walks.iter().enumerate() {
            for (i, (&u, &t)) in walk.nodes.iter().zip(&walk.times).enumerate() {
                let reach = inst.client_reach_time(c, u);
                let lat = t.max(reach);
                if lat < latencies[c] {
                    latencies[c] = lat;
                    served_by[c] = Some(ServiceEvent {
                        walk: w,
                        index: i,
                        node: u,
                        visit_time: t,
                    });
                }
            }
        }
    }
    Ok(Evaluation {
        total: latencies.iter().sum(),
        latencies,
        served_by,
    })
}

/// Latency of each client when it must meet a repairman at its assigned
/// node and time.
pub fn evaluate_perfect(inst: &Instance, sched: &Schedule) -> Result<Evaluation> {
    validate_timing(inst, sched)?;
    let m = inst.clients.len();
    if sched.assignments.len() != m {
        return Err(Error::Invalid(format!(
            "schedule assigns {} clients, instance has {m}",
            sched.assignments.len()
        )));
    }
    let mut latencies = vec![UNSERVED; m];
    let mut served_by = vec![None; m];
    for c in 0..m {
        let Some(a) = sched.assignments[c] else { continue };
        if a.node >= inst.n() {
            return Err(invariant("perfect-service", format!("client {c} assigned to unknown node {}", a.node)));
        }
        if !(inst.client_reach_time(c, a.node) <= a.time + tol(a.time)) {
            return Err(invariant("perfect-service", format!("client {c} cannot reach node {} by {}", a.node, a.time)));
        }
        let Some(w) = sched.walks.iter().position(|walk| walk.present_at(a.node, a.time)) else {
            return Err(invariant(
                "perfect-service",
                format!("client {c}: no repairman at node {} at time {}", a.node, a.time),
            ));
        };
        latencies[c] = a.time;
        served_by[c] = Some(ServiceEvent {
            walk: w,
            index: 0,
            node: a.node,
            visit_time: a.time,
        });
    }
    Ok(Evaluation {
        total: latencies.iter().sum(),
        latencies,
        served_by,
    })
}
