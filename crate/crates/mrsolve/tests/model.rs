mod common;

use mrsolve::model::{ball, build_time_grid, evaluate_indirect, evaluate_perfect, scale_instance, Assignment, Instance, MetricSpace, Schedule, TimedWalk};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_schedule(r: &mut ChaCha8Rng, inst: &Instance) -> Schedule {
    let n = inst.n();
    let walks: Vec<TimedWalk> = inst
        .repairmen
        .iter()
        .map(|rep| {
            let mut nodes = vec![rep.depot];
            nodes.extend((0..r.gen_range(0..5)).map(|_| r.gen_range(0..n)));
            let mut w = TimedWalk::full_speed(rep.id, nodes, 0.0, rep.speed, &inst.metric);
            if r.gen_bool(0.5) {
                let last = *w.nodes.last().unwrap();
                let t = *w.times.last().unwrap() + r.gen_range(1..=4) as f64;
                w.push(last, t);
            }
            w
        })
        .collect();
    // meet at a walk node and time when the client can make it
    let assignments = (0..inst.clients.len())
        .map(|c| {
            walks.iter().flat_map(|w| w.nodes.iter().zip(&w.times)).find_map(|(&u, &t)| {
                (inst.client_reach_time(c, u) <= t).then_some(Assignment { node: u, time: t })
            })
        })
        .collect();
    Schedule { walks, assignments }
}

#[test]
fn grid_example() {
    // path 0-1-2-3 with unit edges, speed 1, four clients
    let m = MetricSpace::from_fn(4, |u, v| (u as f64 - v as f64).abs());
    let inst = Instance::new(m, &[(0, 1.0)], &[(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)]).unwrap();
    let g = build_time_grid(&inst);
    assert_eq!(g.horizon, 6.0);
    assert_eq!(g.stamps.len(), 6);
    assert_eq!(g.last(), 32.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn perfect_is_never_better(seed in 0u64..1_000_000) {
        let mut r = common::rng(seed);
        let n = r.gen_range(4..=7);
        let (k, m) = (r.gen_range(1..=3), r.gen_range(1..=5));
        let inst = common::random_instance(&mut r, n, k, m);
        let s = random_schedule(&mut r, &inst);
        let ind = evaluate_indirect(&inst, &s).unwrap();
        let per = evaluate_perfect(&inst, &s).unwrap();
        for c in 0..m {
            prop_assert!(per.latencies[c] >= ind.latencies[c]);
        }
        prop_assert!(per.total >= ind.total);
    }

    #[test]
    fn balls_grow_with_time(seed in 0u64..1_000_000, t in 0u32..20, dt in 0u32..20) {
        let mut r = common::rng(seed);
        let n = r.gen_range(1..=8);
        let inst = common::random_instance(&mut r, n.max(2), 1, 3);
        for c in 0..3 {
            let small = ball(&inst, c, t as f64 / 2.0);
            let big = ball(&inst, c, (t + dt) as f64 / 2.0);
            prop_assert!(small.iter().all(|u| big.contains(u)));
            prop_assert!(small.contains(&inst.clients[c].start));
            if inst.clients[c].speed == 0.0 {
                prop_assert_eq!(big.clone(), vec![inst.clients[c].start]);
            }
        }
    }

    #[test]
    fn grid_reaches_the_horizon(seed in 0u64..1_000_000) {
        let mut r = common::rng(seed);
        let n = r.gen_range(4..=9);
        let (k, m) = (r.gen_range(1..=3), r.gen_range(0..=9));
        let inst = common::random_instance(&mut r, n, k, m);
        let g = build_time_grid(&inst);
        prop_assert!(g.last() >= g.horizon);
        prop_assert!(g.stamps[0] == 1.0);
    }

    #[test]
    fn scaling_scales_latencies(seed in 0u64..1_000_000) {
        let mut r = common::rng(seed);
        let n = r.gen_range(3..=6);
        let (k, m) = (r.gen_range(1..=2), r.gen_range(1..=4));
        let inst = common::random_instance(&mut r, n, k, m);
        let s = random_schedule(&mut r, &inst);
        let (sc, f) = scale_instance(&inst).unwrap();
        let scaled = Schedule {
            walks: s.walks.iter().map(|w| TimedWalk { owner: w.owner, nodes: w.nodes.clone(), times: w.times.iter().map(|t| t * f).collect() }).collect(),
            assignments: s.assignments.iter().map(|a| a.map(|a| Assignment { node: a.node, time: a.time * f })).collect(),
        };
        let a = evaluate_indirect(&inst, &s).unwrap();
        let b = evaluate_indirect(&sc, &scaled).unwrap();
        for (x, y) in a.latencies.iter().zip(&b.latencies) {
            if x.is_finite() {
                prop_assert!((x * f - y).abs() <= 1e-9 * y.max(1.0));
            } else {
                prop_assert!(y.is_infinite());
            }
        }
    }
}
