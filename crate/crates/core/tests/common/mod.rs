#![allow(dead_code)]

use locker_core::rng::UniformStream;
use locker_core::{Costs, Instance};
use proptest::prelude::*;

pub const GAMMAS: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 5.0, f64::INFINITY];

/// Attractions in (0.05, 3), outside in (0.2, 2), demand in (1, 100).
pub fn random_instance(rng: &mut UniformStream, m: usize, n: usize, gamma: f64) -> Instance {
    let demand = (0..m).map(|_| rng.next_range(1.0, 100.0)).collect();
    let rows = (0..m)
        .map(|_| (0..n).map(|_| rng.next_range(0.05, 3.0)).collect())
        .collect();
    let outside = (0..m).map(|_| rng.next_range(0.2, 2.0)).collect();
    Instance::new(demand, vec![0.0; n], rows, outside, gamma).unwrap()
}

/// Zero, low or high uniform cost relative to total demand per locker.
pub fn cost_level(inst: &Instance, level: usize) -> Costs {
    let per_locker = inst.total_demand() / inst.n().max(1) as f64;
    let f = [0.0, 0.05, 0.4][level % 3] * per_locker;
    Costs::uniform(inst.n(), f).unwrap()
}

pub fn arb_instance(max_m: usize, max_n: usize) -> impl Strategy<Value = (Instance, Costs)> {
    (1..=max_m, 0..=max_n, 0..GAMMAS.len(), 0usize..3, any::<u64>()).prop_map(|(m, n, g, level, seed)| {
        let mut rng = UniformStream::new(seed);
        let inst = random_instance(&mut rng, m, n, GAMMAS[g]);
        let costs = cost_level(&inst, level);
        (inst, costs)
    })
}

/// Largest attraction sum over all antichains among `available`, by enumerating subsets.
pub fn exhaustive_best(inst: &Instance, zone: usize, available: &[usize]) -> f64 {
    let mut best = 0.0f64;
    for mask in 1u32..(1 << available.len()) {
        let set: Vec<usize> = (0..available.len())
            .filter(|&b| mask >> b & 1 == 1)
            .map(|b| available[b])
            .collect();
        let antichain = set
            .iter()
            .all(|&j| set.iter().all(|&k| !inst.dominates(zone, j, k)));
        if antichain {
            let mut sorted = set.clone();
            sorted.sort_unstable();
            let sum: f64 = sorted.iter().map(|&j| inst.attraction(zone, j)).sum();
            best = best.max(sum);
        }
    }
    best
}

/// Maximum profit over all location vectors, using exhaustive antichain enumeration per zone.
pub fn exhaustive_profit(inst: &Instance, costs: &Costs) -> f64 {
    let n = inst.n();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << n) {
        let open: Vec<usize> = (0..n).filter(|&j| mask >> j & 1 == 1).collect();
        let revenue: f64 = (0..inst.m())
            .map(|i| {
                let a = exhaustive_best(inst, i, &open);
                inst.demand(i) * a / (a + inst.outside(i))
            })
            .sum();
        let cost: f64 = open.iter().map(|&j| costs.get(j)).sum();
        best = best.max(revenue - cost);
    }
    best
}
