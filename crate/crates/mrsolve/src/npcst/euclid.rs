//! NPCST in the plane. Tile the plane with hexagons of side twice the
//! largest radius, seven-color the tiles so that equal colors are far
//! apart, collapse every occupied tile to one center node, solve a
//! budgeted prize-collecting tree per color and return the union.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Factors, MetricTree, NpcstInstance, NpcstSolver, TriCriteriaSolution};
use crate::error::{invariant, Error, Result};
use crate::graph::mst_weight;
use crate::model::MetricSpace;
use crate::num::leq;

pub type Tile = (i64, i64);

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Pointy-top hexagons of side `side` in axial coordinates, tile `(0,0)`
/// centered at `origin`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HexGrid {
    pub side: f64,
    pub origin: (f64, f64),
}

pub const NEIGHBORS: [Tile; 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];

impl HexGrid {
    pub fn center(&self, t: Tile) -> (f64, f64) {
        let (q, r) = (t.0 as f64, t.1 as f64);
        (
            self.origin.0 + self.side * SQRT3 * (q + r / 2.0),
            self.origin.1 + self.side * 1.5 * r,
        )
    }

    pub fn corners(&self, t: Tile) -> [(f64, f64); 6] {
        let c = self.center(t);
        std::array::from_fn(|i| {
            let a = std::f64::consts::PI / 180.0 * (60.0 * i as f64 - 30.0);
            (c.0 + self.side * a.cos(), c.1 + self.side * a.sin())
        })
    }

    /// The tile containing `p`. Hexagons are the Voronoi cells of their
    /// centers, so this is the nearest center among the rounded tile and
    /// its neighbors; a point on a boundary goes to the smallest tile.
    pub fn tile_of(&self, p: (f64, f64)) -> Tile {
        let (x, y) = ((p.0 - self.origin.0) / self.side, (p.1 - self.origin.1) / self.side);
        let fq = SQRT3 / 3.0 * x - y / 3.0;
        let fr = 2.0 / 3.0 * y;
        let base = cube_round(fq, fr);
        let mut cands: Vec<Tile> = std::iter::once(base)
            .chain(NEIGHBORS.iter().map(|d| (base.0 + d.0, base.1 + d.1)))
            .collect();
        cands.sort_unstable();
        let dist = |t: Tile| {
            let c = self.center(t);
            ((c.0 - p.0).powi(2) + (c.1 - p.1).powi(2)).sqrt()
        };
        let best = cands.iter().map(|&t| dist(t)).fold(f64::INFINITY, f64::min);
        *cands
            .iter()
            .find(|&&t| dist(t) <= best + 1e-9 * self.side)
            .expect("candidates are non-empty")
    }
}

fn cube_round(q: f64, r: f64) -> Tile {
    let s = -q - r;
    let (mut rq, mut rr, rs) = (q.round(), r.round(), s.round());
    let (dq, dr, ds) = ((rq - q).abs(), (rr - r).abs(), (rs - s).abs());
    if dq > dr && dq > ds {
        rq = -rr - rs;
    } else if dr > ds {
        rr = -rq - rs;
    }
    (rq as i64, rr as i64)
}

pub fn hex_distance(a: Tile, b: Tile) -> i64 {
    let (dq, dr) = (a.0 - b.0, a.1 - b.1);
    (dq.abs() + dr.abs() + (dq + dr).abs()) / 2
}

/// Grid of side `side` centered on `points[root]`, and the tile of every point.
pub fn build_hex_tiling(points: &[(f64, f64)], side: f64, root: usize) -> Result<(HexGrid, Vec<Tile>)> {
    if !(side > 0.0) {
        return Err(Error::Invalid(format!("hexagon side must be positive, got {side}")));
    }
    let grid = HexGrid {
        side,
        origin: points[root],
    };
    Ok((grid, points.iter().map(|&p| grid.tile_of(p)).collect()))
}

/// Seven colors, `1..=7`. The color of `(q,r)` is `q + 3r` mod 7 relative
/// to the smallest tile, so the six neighbors of any tile take the six
/// other colors and equal colors are at least three tiles apart.
pub fn color_tiles(tiles: &[Tile]) -> BTreeMap<Tile, u8> {
    let Some(&base) = tiles.iter().min() else {
        return BTreeMap::new();
    };
    tiles
        .iter()
        .map(|&t| (t, ((t.0 - base.0) + 3 * (t.1 - base.1)).rem_euclid(7) as u8 + 1))
        .collect()
}

/// Adjacent pairs sharing a color.
pub fn coloring_violations(colors: &BTreeMap<Tile, u8>) -> usize {
    colors
        .iter()
        .map(|(&t, &c)| {
            NEIGHBORS
                .iter()
                .filter(|d| colors.get(&(t.0 + d.0, t.1 + d.1)) == Some(&c))
                .count()
        })
        .sum::<usize>()
        / 2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxGraph {
    /// Occupied tiles, sorted.
    pub tiles: Vec<Tile>,
    pub centers: Vec<usize>,
    pub colors: Vec<u8>,
    /// Indices into `tiles` for each client.
    pub client_tiles: Vec<Vec<usize>>,
    pub profit: Vec<f64>,
}

pub fn build_aux_graph(inst: &NpcstInstance, grid: &HexGrid, node_tiles: &[Tile]) -> Result<AuxGraph> {
    let mut tiles: Vec<Tile> = node_tiles.to_vec();
    tiles.sort_unstable();
    tiles.dedup();
    let root_tile = node_tiles[inst.root];
    let centers: Vec<usize> = tiles
        .iter()
        .map(|&t| {
            if t == root_tile {
                inst.root
            } else {
                (0..node_tiles.len()).find(|&u| node_tiles[u] == t).expect("occupied")
            }
        })
        .collect();
    let coloring = color_tiles(&tiles);
    let colors: Vec<u8> = tiles.iter().map(|t| coloring[t]).collect();
    let mut client_tiles = Vec::with_capacity(inst.clients.len());
    let mut profit = vec![0.0; tiles.len()];
    for (c, cl) in inst.clients.iter().enumerate() {
        if cl.radius > grid.side / 2.0 * (1.0 + 1e-12) {
            return Err(Error::Invalid(format!("client {c} radius {} exceeds half the tile side", cl.radius)));
        }
        let mut ts: Vec<usize> = (0..inst.metric.n())
            .filter(|&u| inst.in_ball(c, u, 1.0))
            .map(|u| tiles.binary_search(&node_tiles[u]).expect("occupied"))
            .collect();
        ts.sort_unstable();
        ts.dedup();
        if ts.len() > 3 {
            return Err(invariant("ball-tiles", format!("client {c} meets {} tiles", ts.len())));
        }
        for &i in &ts {
            profit[i] += cl.profit;
        }
        client_tiles.push(ts);
    }
    Ok(AuxGraph {
        tiles,
        centers,
        colors,
        client_tiles,
        profit,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BpcstSubsolver {
    /// Branch and bound, exact, at most [`BPCST_EXACT_CAP`] centers.
    Exact,
    /// Best profit per added length first. No ratio guarantee.
    Greedy,
}

pub const BPCST_EXACT_CAP: usize = 15;

/// A tree through `root` over a subset of `nodes` with MST cost at most
/// `budget`, maximizing the summed node profit.
pub fn solve_bpcst(metric: &MetricSpace, nodes: &[usize], profits: &[f64], root: usize, budget: f64, sub: BpcstSubsolver) -> Result<MetricTree> {
    let Some(ri) = nodes.iter().position(|&u| u == root) else {
        return Err(Error::Invalid("root must be among the nodes".into()));
    };
    let chosen = match sub {
        BpcstSubsolver::Exact => bpcst_exact(metric, nodes, profits, ri, budget)?,
        BpcstSubsolver::Greedy => bpcst_greedy(metric, nodes, profits, ri, budget),
    };
    let tree = MetricTree::spanning(metric, &chosen);
    if !leq(tree.cost, budget) {
        return Err(invariant("bpcst-budget", format!("tree cost {} over budget {budget}", tree.cost)));
    }
    Ok(tree)
}

fn bpcst_exact(metric: &MetricSpace, nodes: &[usize], profits: &[f64], ri: usize, budget: f64) -> Result<Vec<usize>> {
    if nodes.len() > BPCST_EXACT_CAP {
        return Err(Error::CapExceeded(format!(
            "exact BPCST handles {BPCST_EXACT_CAP} centers, got {}",
            nodes.len()
        )));
    }
    // profitable nodes first so good incumbents appear early
    let mut order: Vec<usize> = (0..nodes.len()).filter(|&i| i != ri).collect();
    order.sort_by(|&a, &b| profits[b].total_cmp(&profits[a]).then(a.cmp(&b)));
    let mut suffix = vec![0.0; order.len() + 1];
    for k in (0..order.len()).rev() {
        suffix[k] = suffix[k + 1] + profits[order[k]].max(0.0);
    }
    struct Search<'a> {
        metric: &'a MetricSpace,
        nodes: &'a [usize],
        profits: &'a [f64],
        order: Vec<usize>,
        suffix: Vec<f64>,
        budget: f64,
        best: (f64, Vec<usize>),
    }
    impl Search<'_> {
        fn mst(&self, set: &[usize]) -> f64 {
            let pts: Vec<usize> = set.iter().map(|&i| self.nodes[i]).collect();
            mst_weight(&pts, |u, v| self.metric.d(u, v))
        }

        fn go(&mut self, k: usize, set: &mut Vec<usize>, profit: f64) {
            if profit + self.suffix[k] <= self.best.0 {
                return;
            }
            // a superset's Steiner tree is at least half this set's MST
            let cost = self.mst(set);
            if !leq(cost, 2.0 * self.budget) {
                return;
            }
            if leq(cost, self.budget) && profit > self.best.0 {
                self.best = (profit, set.clone());
            }
            if k == self.order.len() {
                return;
            }
            let i = self.order[k];
            set.push(i);
            self.go(k + 1, set, profit + self.profits[i]);
            set.pop();
            self.go(k + 1, set, profit);
        }
    }
    let mut s = Search {
        metric,
        nodes,
        profits,
        order,
        suffix,
        budget,
        best: (profits[ri], vec![ri]),
    };
    s.go(0, &mut vec![ri], profits[ri]);
    Ok(s.best.1.iter().map(|&i| nodes[i]).collect())
}

fn bpcst_greedy(metric: &MetricSpace, nodes: &[usize], profits: &[f64], ri: usize, budget: f64) -> Vec<usize> {
    let mut set = vec![nodes[ri]];
    let mut left: Vec<usize> = (0..nodes.len()).filter(|&i| i != ri && profits[i] > 0.0).collect();
    let mut cost = 0.0;
    loop {
        let mut best: Option<(f64, usize, f64)> = None;
        for (k, &i) in left.iter().enumerate() {
            let mut trial = set.clone();
            trial.push(nodes[i]);
            let c = mst_weight(&trial, |u, v| metric.d(u, v));
            if !leq(c, budget) {
                continue;
            }
            let extra = (c - cost).max(0.0);
            let score = if extra == 0.0 { f64::INFINITY } else { profits[i] / extra };
            if best.is_none_or(|b| score > b.0) {
                best = Some((score, k, c));
            }
        }
        let Some((_, k, c)) = best else { break };
        set.push(nodes[left.remove(k)]);
        cost = c;
    }
    set
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EuclidConfig {
    pub eps: f64,
    pub subsolver: BpcstSubsolver,
}

impl Default for EuclidConfig {
    fn default() -> Self {
        Self {
            eps: 1.0,
            subsolver: BpcstSubsolver::Exact,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EuclidSolution {
    pub solution: TriCriteriaSolution,
    pub grid: HexGrid,
    pub aux: AuxGraph,
    /// One tree per color, `None` for colors without a profitable tile.
    pub color_trees: Vec<Option<MetricTree>>,
    /// Clients assigned to a tile whose center the union tree contains.
    pub served: Vec<usize>,
    /// Largest over smallest client radius.
    pub p: f64,
}

/// Radius ratio of the instance; every radius must be positive.
pub fn radius_ratio(inst: &NpcstInstance) -> Result<f64> {
    let lo = inst.clients.iter().map(|c| c.radius).fold(f64::INFINITY, f64::min);
    let hi = inst.clients.iter().map(|c| c.radius).fold(0.0, f64::max);
    if inst.clients.iter().any(|c| !(c.radius > 0.0)) {
        return Err(Error::Invalid("planar NPCST needs positive radii".into()));
    }
    Ok(if inst.clients.is_empty() { 1.0 } else { hi / lo })
}

pub fn solve_npcsta(inst: &NpcstInstance, coords: &[(f64, f64)], cfg: &EuclidConfig) -> Result<EuclidSolution> {
    let n = inst.metric.n();
    if coords.len() != n {
        return Err(Error::Invalid(format!("{} coordinates for {n} nodes", coords.len())));
    }
    if !(cfg.eps > 0.0) {
        return Err(Error::Invalid("eps must be positive".into()));
    }
    let p = radius_ratio(inst)?;
    // without clients any positive side works
    let side = match inst.clients.iter().map(|c| c.radius).fold(0.0, f64::max) {
        r if r > 0.0 => 2.0 * r,
        _ => 1.0,
    };
    let (grid, node_tiles) = build_hex_tiling(coords, side, inst.root)?;
    let aux = build_aux_graph(inst, &grid, &node_tiles)?;
    let budget = 5.0 * inst.budget;
    let mut color_trees = Vec::with_capacity(7);
    let mut union = vec![inst.root];
    for color in 1..=7u8 {
        let profits: Vec<f64> = (0..aux.tiles.len())
            .map(|i| if aux.colors[i] == color { aux.profit[i] } else { 0.0 })
            .collect();
        if profits.iter().all(|&x| x == 0.0) {
            color_trees.push(None);
            continue;
        }
        let t = solve_bpcst(inst.metric, &aux.centers, &profits, inst.root, budget, cfg.subsolver)?;
        if !leq(t.cost, budget) {
            return Err(invariant("color-tree-weight", format!("color {color} tree weighs {} over {budget}", t.cost)));
        }
        union.extend_from_slice(&t.nodes);
        color_trees.push(Some(t));
    }
    let tree = MetricTree::spanning(inst.metric, &union);
    if !leq(tree.cost, 35.0 * inst.budget) {
        return Err(invariant("union-weight", format!("union weighs {} over 35 x {}", tree.cost, inst.budget)));
    }
    let in_tree: Vec<bool> = aux.centers.iter().map(|u| tree.nodes.binary_search(u).is_ok()).collect();
    let served: Vec<usize> = (0..inst.clients.len())
        .filter(|&c| aux.client_tiles[c].iter().any(|&i| in_tree[i]))
        .collect();
    let sigma = 4.0 * p + 1.0;
    for &c in &served {
        let cl = &inst.clients[c];
        let d = inst.metric.dist_to_set(cl.node, &tree.nodes);
        if !leq(d, sigma * cl.radius) {
            return Err(invariant(
                "served-distance",
                format!("client {c} is {d} from the tree, over {sigma} x {}", cl.radius),
            ));
        }
    }
    let solution = TriCriteriaSolution::new(inst, tree, sigma, 35.0);
    Ok(EuclidSolution {
        solution,
        grid,
        aux,
        color_trees,
        served,
        p,
    })
}

/// The planar solver behind the generic interface. `coords` belong to the
/// metric it will be called with; `p` is the radius ratio it declares.
#[derive(Clone, Debug)]
pub struct EuclidSolver {
    pub cfg: EuclidConfig,
    pub coords: Vec<(f64, f64)>,
    pub p: f64,
}

impl NpcstSolver for EuclidSolver {
    fn solve(&self, inst: &NpcstInstance) -> Result<TriCriteriaSolution> {
        let s = solve_npcsta(inst, &self.coords, &self.cfg)?;
        if s.p > self.p * (1.0 + 1e-9) {
            return Err(Error::Invalid(format!("radius ratio {} exceeds the declared {}", s.p, self.p)));
        }
        Ok(s.solution)
    }

    fn factors(&self, _n: usize) -> Factors {
        Factors {
            sigma: 4.0 * self.p + 1.0,
            phi: 35.0,
            omega: 12.0 + self.cfg.eps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::npcst::NpcstClient;

    #[test]
    fn root_tile_and_near_points() {
        let g = HexGrid {
            side: 2.0,
            origin: (1.0, 1.0),
        };
        assert_eq!(g.tile_of((1.0, 1.0)), (0, 0));
        assert_eq!(g.tile_of((1.2, 1.0)), (0, 0));
        for t in NEIGHBORS {
            assert_eq!(g.tile_of(g.center(t)), t);
        }
    }

    #[test]
    fn coloring_examples() {
        assert_eq!(color_tiles(&[(4, -2)])[&(4, -2)], 1);
        let mut patch = vec![(0, 0)];
        patch.extend(NEIGHBORS);
        let c = color_tiles(&patch);
        let mut used: Vec<u8> = c.values().copied().collect();
        used.sort_unstable();
        assert_eq!(used, (1..=7).collect::<Vec<u8>>());
        assert_eq!(coloring_violations(&c), 0);
    }

    #[test]
    fn everything_near_the_root() {
        let pts = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5)];
        let m = MetricSpace::euclidean(&pts);
        let inst = NpcstInstance {
            metric: &m,
            root: 0,
            clients: vec![
                NpcstClient {
                    node: 1,
                    profit: 1.0,
                    radius: 1.0,
                },
                NpcstClient {
                    node: 2,
                    profit: 2.0,
                    radius: 1.0,
                },
            ],
            budget: 0.0,
        };
        let s = solve_npcsta(&inst, &pts, &EuclidConfig::default()).unwrap();
        assert_eq!(s.solution.profit, 3.0);
        assert_eq!(s.solution.tree.nodes, vec![0]);
        assert_eq!(s.served, vec![0, 1]);
    }

    #[test]
    fn bpcst_examples() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (5.0, 0.0)];
        let m = MetricSpace::euclidean(&pts);
        let p = [1.0, 2.0, 3.0];
        for sub in [BpcstSubsolver::Exact, BpcstSubsolver::Greedy] {
            assert_eq!(solve_bpcst(&m, &[0, 1, 2], &p, 0, 0.0, sub).unwrap().nodes, vec![0]);
            assert_eq!(solve_bpcst(&m, &[0, 1, 2], &p, 0, 1.0, sub).unwrap().nodes, vec![0, 1]);
            assert_eq!(solve_bpcst(&m, &[0, 1, 2], &p, 0, 5.0, sub).unwrap().nodes, vec![0, 1, 2]);
        }
    }
}
