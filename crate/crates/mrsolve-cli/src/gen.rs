//! Seeded instance generators.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::instance_file::{InstanceFile, Mode, NpcstBlock};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Random points, a random sparse graph over them with rounded-up
    /// Euclidean weights, and its shortest-path closure.
    RandomMetric,
    /// Uniform points in a square, Euclidean distances.
    EuclideanUniform,
    /// Clients clustered around a few pickup lockers; repairmen start at a
    /// central warehouse.
    Locker,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub kind: Kind,
    pub nodes: usize,
    pub repairmen: usize,
    pub clients: usize,
    pub seed: u64,
    /// All repairmen get speed 1.
    pub equal_speeds: bool,
    /// Attach an NPCST block with random profits, radii and budget.
    pub npcst: bool,
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// `v / 10^k` exactly.
fn dec(v: i64, k: u32) -> BigRational {
    BigRational::new(BigInt::from(v), BigInt::from(10i64.pow(k)))
}

pub fn generate(p: &GenParams) -> InstanceFile {
    let mut r = ChaCha8Rng::seed_from_u64(p.seed);
    let n = p.nodes.max(1);
    let mut file = InstanceFile {
        mode: Mode::Metric,
        nodes: n,
        rows: Vec::new(),
        coords: Vec::new(),
        repairmen: Vec::new(),
        clients: Vec::new(),
        npcst: None,
    };
    // node 0 is the warehouse for lockers, any node otherwise
    let mut client_nodes: Vec<usize> = (0..n).collect();
    match p.kind {
        Kind::RandomMetric => {
            let pts: Vec<(i64, i64)> = (0..n).map(|_| (r.gen_range(0..=100), r.gen_range(0..=100))).collect();
            let mut w = vec![vec![i64::MAX; n]; n];
            for (u, row) in w.iter_mut().enumerate() {
                row[u] = 0;
            }
            for u in 0..n {
                for v in u + 1..n {
                    if v == u + 1 || r.gen_bool(0.4) {
                        let (dx, dy) = ((pts[u].0 - pts[v].0) as f64, (pts[u].1 - pts[v].1) as f64);
                        let d = (dx.hypot(dy).ceil() as i64).max(1);
                        w[u][v] = d;
                        w[v][u] = d;
                    }
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        if w[i][k] != i64::MAX && w[k][j] != i64::MAX && w[i][k] + w[k][j] < w[i][j] {
                            w[i][j] = w[i][k] + w[k][j];
                        }
                    }
                }
            }
            file.rows = w.iter().map(|row| row.iter().map(|&d| int(d)).collect()).collect();
        }
        Kind::EuclideanUniform => {
            file.mode = Mode::Euclidean;
            file.coords = (0..n).map(|_| (dec(r.gen_range(0..=10_000), 2), dec(r.gen_range(0..=10_000), 2))).collect();
        }
        Kind::Locker => {
            file.mode = Mode::Euclidean;
            let lockers = ((n as f64).sqrt().floor() as usize).clamp(1, n.saturating_sub(1).max(1));
            let centers: Vec<(i64, i64)> = (0..lockers).map(|_| (r.gen_range(1_000..=9_000), r.gen_range(1_000..=9_000))).collect();
            file.coords.push((dec(5_000, 2), dec(5_000, 2)));
            for i in 1..n {
                let c = centers[(i - 1) % lockers];
                let pos = if i <= lockers {
                    c
                } else {
                    (c.0 + r.gen_range(-600..=600), c.1 + r.gen_range(-600..=600))
                };
                file.coords.push((dec(pos.0, 2), dec(pos.1, 2)));
            }
            // residents live off the lockers and the warehouse
            if n > lockers + 1 {
                client_nodes = (lockers + 1..n).collect();
            }
        }
    }
    for _ in 0..p.repairmen.max(1) {
        let depot = if p.kind == Kind::Locker { 0 } else { r.gen_range(0..n) };
        let speed = if p.equal_speeds { int(1) } else { dec(r.gen_range(10..=30), 1) };
        file.repairmen.push((depot, speed));
    }
    for _ in 0..p.clients {
        let at = client_nodes[r.gen_range(0..client_nodes.len())];
        file.clients.push((at, dec(r.gen_range(0..=10), 1)));
    }
    if p.npcst {
        let scale: i64 = match p.kind {
            Kind::RandomMetric => 20,
            _ => 15,
        };
        let prizes = (0..p.clients).map(|_| (int(r.gen_range(1..=5)), int(r.gen_range(1..=scale)))).collect();
        file.npcst = Some(NpcstBlock {
            root: file.repairmen[0].0,
            budget: int(r.gen_range(0..=4 * scale)),
            prizes,
        });
    }
    file
}
