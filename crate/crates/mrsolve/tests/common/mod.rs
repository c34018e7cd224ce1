#![allow(dead_code)]

use mrsolve::graph::ShortestPaths;
use mrsolve::model::{Instance, MetricSpace};
use mrsolve::npcst::NpcstClient;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shortest-path closure of a random graph with integer weights in 1..=9.
pub fn random_metric(r: &mut ChaCha8Rng, n: usize) -> MetricSpace {
    let mut w = vec![vec![f64::INFINITY; n]; n];
    for (u, row) in w.iter_mut().enumerate() {
        row[u] = 0.0;
    }
    for u in 0..n {
        for v in u + 1..n {
            if v == u + 1 || r.gen_bool(0.5) {
                let x = r.gen_range(1..=9) as f64;
                w[u][v] = x;
                w[v][u] = x;
            }
        }
    }
    let sp = ShortestPaths::new(n, |u, v| w[u][v]);
    MetricSpace::from_fn(n, |u, v| sp.d(u, v))
}

pub fn random_clients(r: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<NpcstClient> {
    (0..k)
        .map(|_| NpcstClient {
            node: r.gen_range(0..n),
            profit: r.gen_range(1..=5) as f64,
            radius: r.gen_range(1..=4) as f64,
        })
        .collect()
}

/// Small Sum-MR instance with integer distances, integer speeds and no
/// client starting on a depot.
pub fn random_instance(r: &mut ChaCha8Rng, n: usize, reps: usize, clients: usize) -> Instance {
    let metric = random_metric(r, n);
    let depots: Vec<(usize, f64)> = (0..reps).map(|_| (r.gen_range(0..n), r.gen_range(1..=2) as f64)).collect();
    let free: Vec<usize> = (0..n).filter(|u| depots.iter().all(|d| d.0 != *u)).collect();
    let cl: Vec<(usize, f64)> = (0..clients)
        .map(|_| (free[r.gen_range(0..free.len())], r.gen_range(0..=1) as f64))
        .collect();
    Instance::new(metric, &depots, &cl).unwrap()
}
