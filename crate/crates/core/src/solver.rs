//! Exact solution of the location problem by combinatorial branch-and-bound.
//!
//! For a fixed set of available lockers, a zone's best restriction is an
//! antichain with the largest total attraction. With threshold dominance an
//! antichain is exactly a set whose largest attraction is at most
//! `(1 + gamma)` times its smallest, so the optimum is found by sliding a
//! window over the available attractions sorted ascending ("window oracle").
//!
//! The search branches on location variables only. Each node fixes some
//! lockers open, some closed and leaves the rest free. Its bound is the
//! smaller of the window optimum over open and free lockers minus the cost of
//! the open ones ([`node_bound`]) and a Lagrangian bound that prices the
//! links between restriction and location variables. Prices are refined by
//! subgradient steps, inherited by children, and used to fix free lockers
//! whose opposite branch cannot beat the incumbent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::choice::{self, capture_rate, LocationDecision, RestrictionDecision};
use crate::error::{Error, Result};
use crate::instance::{Costs, Instance};

/// Largest locker count accepted by [`solve_bruteforce`].
pub const BRUTE_FORCE_MAX_LOCKERS: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BranchingRule {
    /// Branch first on the free locker with the largest `sum_i d_i a_ij`.
    MaxDemandWeightedAttraction,
    LowestIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Heuristic {
    GreedyLocalSearch,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Relative gap at which a node counts as no better than the incumbent.
    pub gap_tolerance: f64,
    pub time_limit_seconds: Option<f64>,
    pub node_limit: Option<u64>,
    pub branching_rule: BranchingRule,
    pub heuristic: Heuristic,
    pub threads: usize,
    /// Subgradient steps spent tightening each node bound (more at the root).
    pub bound_iterations: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            gap_tolerance: 1e-6,
            time_limit_seconds: None,
            node_limit: None,
            branching_rule: BranchingRule::MaxDemandWeightedAttraction,
            heuristic: Heuristic::GreedyLocalSearch,
            threads: 1,
            bound_iterations: 4,
        }
    }
}

impl SolveConfig {
    /// Tolerance suited to exact comparisons against enumeration.
    pub fn exact() -> Self {
        Self {
            gap_tolerance: 1e-15,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gap_tolerance > 0.0 && self.gap_tolerance.is_finite()) {
            return Err(Error::validation("gap_tolerance", "must be positive"));
        }
        if let Some(t) = self.time_limit_seconds {
            if !(t > 0.0) {
                return Err(Error::validation("time_limit_seconds", "must be positive"));
            }
        }
        if self.threads == 0 {
            return Err(Error::validation("threads", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    /// Search finished and the bound meets the incumbent to rounding error.
    Optimal,
    /// Search finished by the gap tolerance with a residual gap.
    GapLimit,
    TimeLimit,
    NodeLimit,
}

impl SolveStatus {
    pub fn label(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "OPTIMAL",
            SolveStatus::GapLimit => "GAP_LIMIT",
            SolveStatus::TimeLimit => "TIME_LIMIT",
            SolveStatus::NodeLimit => "NODE_LIMIT",
        }
    }

    pub fn hit_limit(self) -> bool {
        matches!(self, SolveStatus::TimeLimit | SolveStatus::NodeLimit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub location: LocationDecision,
    pub restriction: RestrictionDecision,
    pub profit: f64,
    pub revenue: f64,
    pub facility_cost: f64,
    pub upper_bound: f64,
    /// `|upper_bound - profit| / |upper_bound|`, zero when both vanish.
    pub gap: f64,
    pub nodes_explored: u64,
    pub wall_time_seconds: f64,
    pub status: SolveStatus,
}

/// Relative gap between a bound and an incumbent value.
pub fn relative_gap(bound: f64, value: f64) -> f64 {
    let diff = (bound - value).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / bound.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LockerState {
    Free,
    Open,
    Closed,
}

/// A branch-and-bound node: each locker is committed open, committed closed, or free.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub status: Vec<LockerState>,
    pub bound: f64,
}

impl NodeState {
    pub fn root(n: usize) -> Self {
        Self {
            status: vec![LockerState::Free; n],
            bound: f64::INFINITY,
        }
    }

    pub fn from_sets(n: usize, open: &[usize], closed: &[usize]) -> Result<Self> {
        let mut node = Self::root(n);
        for (set, state) in [(open, LockerState::Open), (closed, LockerState::Closed)] {
            for &j in set {
                if j >= n || node.status[j] != LockerState::Free {
                    return Err(Error::Contract(format!(
                        "locker {j} is out of range or committed twice"
                    )));
                }
                node.status[j] = state;
            }
        }
        Ok(node)
    }

    fn with_state(state: LockerState, status: &[LockerState]) -> Vec<usize> {
        status
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == state)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn committed_open(&self) -> Vec<usize> {
        Self::with_state(LockerState::Open, &self.status)
    }

    pub fn committed_closed(&self) -> Vec<usize> {
        Self::with_state(LockerState::Closed, &self.status)
    }

    pub fn free(&self) -> Vec<usize> {
        Self::with_state(LockerState::Free, &self.status)
    }
}

/// Best restriction for `zone` among `available` lockers: the antichain with
/// the largest attraction sum, and that sum. Ties go to the window with the
/// smallest starting attraction. The returned set is sorted by id.
pub fn best_restriction(inst: &Instance, zone: usize, available: &[usize]) -> (Vec<usize>, f64) {
    let row = inst.row(zone);
    let mut sorted: Vec<usize> = available.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    sorted.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
    let factor = inst.dominance_factor();
    let mut best: Option<(f64, usize, usize)> = None;
    let mut end = 0;
    let mut sum = 0.0;
    for start in 0..sorted.len() {
        let limit = factor * row[sorted[start]];
        while end < sorted.len() && row[sorted[end]] <= limit {
            sum += row[sorted[end]];
            end += 1;
        }
        if best.map_or(true, |(b, _, _)| sum > b) {
            best = Some((sum, start, end));
        }
        sum -= row[sorted[start]];
    }
    match best {
        None => (Vec::new(), 0.0),
        Some((_, s, e)) => {
            let mut set = sorted[s..e].to_vec();
            set.sort_unstable();
            let total = set.iter().map(|&j| row[j]).sum();
            (set, total)
        }
    }
}

/// Restriction built from [`best_restriction`] over the open lockers of every zone.
pub fn optimal_restriction(inst: &Instance, location: &LocationDecision) -> RestrictionDecision {
    let open = location.open_set();
    let sets: Vec<Vec<usize>> = (0..inst.m()).map(|i| best_restriction(inst, i, &open).0).collect();
    RestrictionDecision::from_sets(inst.n(), &sets)
}

/// Upper bound on the profit of every completion of `node`:
/// `sum_i d_i A_i / (A_i + a_i0) - sum_{j open} f_j`, with `A_i` the window
/// optimum over committed-open and free lockers.
pub fn node_bound(inst: &Instance, costs: &Costs, node: &NodeState) -> f64 {
    let available: Vec<usize> = (0..inst.n())
        .filter(|&j| node.status[j] != LockerState::Closed)
        .collect();
    let revenue: f64 = (0..inst.m())
        .map(|i| {
            let (_, a) = best_restriction(inst, i, &available);
            inst.demand(i) * capture_rate(a, inst.outside(i))
        })
        .sum();
    let cost: f64 = node.committed_open().iter().map(|&j| costs.get(j)).sum();
    revenue - cost
}

/// Window oracle with per-zone sort orders computed once.
struct Oracle<'a> {
    inst: &'a Instance,
    costs: &'a Costs,
    sorted: Vec<Vec<u32>>,
    factor: f64,
}

impl<'a> Oracle<'a> {
    fn new(inst: &'a Instance, costs: &'a Costs) -> Self {
        let sorted = (0..inst.m())
            .map(|i| {
                let row = inst.row(i);
                let mut idx: Vec<u32> = (0..inst.n() as u32).collect();
                idx.sort_by(|&a, &b| row[a as usize].total_cmp(&row[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self {
            inst,
            costs,
            sorted,
            factor: inst.dominance_factor(),
        }
    }

    /// Largest antichain attraction sum for `zone` among lockers with `avail[j]`.
    fn zone_best(&self, zone: usize, avail: &[bool], buf: &mut Vec<f64>) -> f64 {
        let row = self.inst.row(zone);
        buf.clear();
        buf.extend(
            self.sorted[zone]
                .iter()
                .filter(|&&j| avail[j as usize])
                .map(|&j| row[j as usize]),
        );
        let mut best = 0.0f64;
        let mut end = 0;
        let mut sum = 0.0;
        for start in 0..buf.len() {
            let limit = self.factor * buf[start];
            while end < buf.len() && buf[end] <= limit {
                sum += buf[end];
                end += 1;
            }
            best = best.max(sum);
            if end == buf.len() {
                break;
            }
            sum -= buf[start];
        }
        best
    }

    fn cost_of(&self, open: &[bool]) -> f64 {
        open.iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(j, _)| self.costs.get(j))
            .sum()
    }

    fn profit(&self, open: &[bool], buf: &mut Vec<f64>) -> f64 {
        let revenue: f64 = (0..self.inst.m())
            .map(|i| {
                let a = self.zone_best(i, open, buf);
                self.inst.demand(i) * capture_rate(a, self.inst.outside(i))
            })
            .sum();
        revenue - self.cost_of(open)
    }
}

/// Exact evaluation of a location decision with the best restriction per zone.
pub fn evaluate_location(inst: &Instance, costs: &Costs, location: &LocationDecision) -> Result<choice::ProfitBreakdown> {
    let restriction = optimal_restriction(inst, location);
    choice::profit(inst, location, &restriction, costs)
}

fn finish(
    inst: &Instance,
    costs: &Costs,
    open: Vec<bool>,
    upper_bound: f64,
    nodes_explored: u64,
    started: Instant,
    status: SolveStatus,
) -> Result<SolveResult> {
    let location = LocationDecision { open };
    let restriction = optimal_restriction(inst, &location);
    let eval = choice::profit(inst, &location, &restriction, costs)?;
    let upper_bound = upper_bound.max(eval.profit);
    Ok(SolveResult {
        location,
        restriction,
        profit: eval.profit,
        revenue: eval.revenue,
        facility_cost: eval.facility_cost,
        upper_bound,
        gap: relative_gap(upper_bound, eval.profit),
        nodes_explored,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        status,
    })
}

/// Enumerates every location decision. Refuses more than
/// [`BRUTE_FORCE_MAX_LOCKERS`] lockers.
pub fn solve_bruteforce(inst: &Instance, costs: &Costs) -> Result<SolveResult> {
    costs.check(inst)?;
    let n = inst.n();
    if n > BRUTE_FORCE_MAX_LOCKERS {
        return Err(Error::TooLarge(format!(
            "brute force enumerates 2^n location vectors and is limited to n <= {BRUTE_FORCE_MAX_LOCKERS} (n = {n})"
        )));
    }
    let started = Instant::now();
    let oracle = Oracle::new(inst, costs);
    let mut buf = Vec::with_capacity(n);
    let mut open = vec![false; n];
    let mut best_value = f64::NEG_INFINITY;
    let mut best_open = open.clone();
    for mask in 0u64..(1u64 << n) {
        for (j, o) in open.iter_mut().enumerate() {
            *o = mask >> j & 1 == 1;
        }
        let value = oracle.profit(&open, &mut buf);
        if value > best_value {
            best_value = value;
            best_open.clone_from(&open);
        }
    }
    finish(inst, costs, best_open, f64::NEG_INFINITY, 1u64 << n, started, SolveStatus::Optimal)
}

/// Greedy construction followed by add, drop, swap and pair-add moves until
/// no move improves the profit.
pub fn greedy_local_search(inst: &Instance, costs: &Costs) -> Result<LocationDecision> {
    costs.check(inst)?;
    let oracle = Oracle::new(inst, costs);
    Ok(LocationDecision {
        open: local_search(&oracle, vec![false; inst.n()]).0,
    })
}

fn improves(candidate: f64, current: f64) -> bool {
    candidate > current + 1e-12 * current.abs().max(1.0)
}

fn local_search(oracle: &Oracle<'_>, start: Vec<bool>) -> (Vec<bool>, f64) {
    let n = start.len();
    let mut buf = Vec::with_capacity(n);
    let mut open = start;
    let mut value = oracle.profit(&open, &mut buf);

    // greedy additions, best gain first
    loop {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if open[j] {
                continue;
            }
            open[j] = true;
            let v = oracle.profit(&open, &mut buf);
            open[j] = false;
            if improves(v, best.map_or(value, |(_, b)| b)) {
                best = Some((j, v));
            }
        }
        match best {
            Some((j, v)) => {
                open[j] = true;
                value = v;
            }
            None => break,
        }
    }

    // first-improvement add/drop, then swaps
    loop {
        let mut moved = false;
        for j in 0..n {
            open[j] = !open[j];
            let v = oracle.profit(&open, &mut buf);
            if improves(v, value) {
                value = v;
                moved = true;
            } else {
                open[j] = !open[j];
            }
        }
        if !moved {
            'swap: for out in 0..n {
                if !open[out] {
                    continue;
                }
                for inn in 0..n {
                    if open[inn] {
                        continue;
                    }
                    open[out] = false;
                    open[inn] = true;
                    let v = oracle.profit(&open, &mut buf);
                    if improves(v, value) {
                        value = v;
                        moved = true;
                        break 'swap;
                    }
                    open[out] = true;
                    open[inn] = false;
                }
            }
        }
        if !moved {
            // two lockers at once: escapes optima where each alone sits inside a dominated window
            'pair: for a in 0..n {
                if open[a] {
                    continue;
                }
                for b in a + 1..n {
                    if open[b] {
                        continue;
                    }
                    open[a] = true;
                    open[b] = true;
                    let v = oracle.profit(&open, &mut buf);
                    if improves(v, value) {
                        value = v;
                        moved = true;
                        break 'pair;
                    }
                    open[a] = false;
                    open[b] = false;
                }
            }
        }
        if !moved {
            break;
        }
    }
    (open, value)
}

/// Prices of the linking rows, kept in single precision on queued nodes.
type Prices = Arc<[f32]>;

/// Budget for prices stored on queued nodes.
const PRICE_MEMORY_BYTES: usize = 256 << 20;

struct Node {
    status: Vec<LockerState>,
    bound: f64,
    seq: u64,
    prices: Option<Prices>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: larger bound first, then older node first
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Lagrangian relaxation of `y_ij <= x_j` over free lockers.
///
/// With prices `lam_ij >= 0` each zone picks fractions `t_ij` of available
/// lockers inside one window, maximizing `d_i g(A) - sum_j lam_ij t_ij`.
/// That concave knapsack is solved by buying attraction in order of price
/// per unit. A free locker opens when its prices exceed its cost. Open
/// lockers carry no price.
struct Relaxation<'a> {
    oracle: Oracle<'a>,
    /// Prices tuned at the root, the start for nodes stored without their own.
    root: Vec<f64>,
}

#[derive(Default)]
struct ZoneScratch {
    avail: Vec<u32>,
    prefix: Vec<f64>,
    ends: Vec<usize>,
    items: Vec<u32>,
    picks: Vec<(u32, f64)>,
    best: Vec<(u32, f64)>,
}

struct Work {
    lam: Vec<f64>,
    best_lam: Vec<f64>,
    t: Vec<f64>,
    price: Vec<f64>,
    best_price: Vec<f64>,
    x: Vec<bool>,
    best_x: Vec<bool>,
    open: Vec<bool>,
    avail: Vec<bool>,
    buf: Vec<f64>,
    zone: ZoneScratch,
}

impl Work {
    fn new(m: usize, n: usize) -> Self {
        Self {
            lam: vec![0.0; m * n],
            best_lam: vec![0.0; m * n],
            t: vec![0.0; m * n],
            price: vec![0.0; n],
            best_price: vec![0.0; n],
            x: vec![false; n],
            best_x: vec![false; n],
            open: vec![false; n],
            avail: vec![false; n],
            buf: Vec::with_capacity(n),
            zone: ZoneScratch::default(),
        }
    }
}

/// Outcome of bounding one node.
struct Evaluated {
    status: Vec<LockerState>,
    bound: f64,
    /// Largest bound among parts of the subtree cut off on the way.
    pruned: f64,
    /// Whether the node survives with free lockers left.
    alive: bool,
    offers: Vec<(f64, Vec<bool>)>,
    /// Location suggested by the relaxation.
    suggested: Option<Vec<bool>>,
}

fn prunable(bound: f64, incumbent: f64, tol: f64) -> bool {
    bound <= incumbent || bound - incumbent <= tol * bound.abs()
}

impl<'a> Relaxation<'a> {
    fn new(oracle: Oracle<'a>) -> Self {
        let inst = oracle.inst;
        let (m, n) = (inst.m(), inst.n());
        // split each cost over zones in proportion to what the locker alone captures
        let mut root = vec![0.0; m * n];
        for j in 0..n {
            let share = |i: usize| inst.demand(i) * capture_rate(inst.attraction(i, j), inst.outside(i));
            let total: f64 = (0..m).map(share).sum();
            if total > 0.0 {
                for i in 0..m {
                    root[i * n + j] = oracle.costs.get(j) * share(i) / total;
                }
            }
        }
        Self { oracle, root }
    }

    fn zone_value(
        &self,
        i: usize,
        status: &[LockerState],
        lam: &[f64],
        t: &mut [f64],
        z: &mut ZoneScratch,
    ) -> f64 {
        let inst = self.oracle.inst;
        let row = inst.row(i);
        let d = inst.demand(i);
        let a0 = inst.outside(i);
        z.avail.clear();
        z.prefix.clear();
        z.prefix.push(0.0);
        let mut sum = 0.0;
        for &j in &self.oracle.sorted[i] {
            if status[j as usize] != LockerState::Closed && row[j as usize] > 0.0 {
                sum += row[j as usize];
                z.avail.push(j);
                z.prefix.push(sum);
            }
        }
        let k = z.avail.len();
        z.ends.clear();
        let mut end = 0;
        for s in 0..k {
            let limit = self.oracle.factor * row[z.avail[s] as usize];
            while end < k && row[z.avail[end] as usize] <= limit {
                end += 1;
            }
            z.ends.push(end);
        }

        let price = |j: u32| {
            if status[j as usize] == LockerState::Free {
                lam[j as usize]
            } else {
                0.0
            }
        };
        let mut best = 0.0;
        z.best.clear();
        // largest windows first so the capacity test cuts the rest early
        for s in (0..k).rev() {
            let end = z.ends[s];
            if s > 0 && z.ends[s - 1] == end {
                continue;
            }
            if d * capture_rate(z.prefix[end] - z.prefix[s], a0) <= best {
                continue;
            }
            z.items.clear();
            z.items.extend_from_slice(&z.avail[s..end]);
            z.items.sort_by(|&a, &b| {
                (price(a) / row[a as usize]).total_cmp(&(price(b) / row[b as usize]))
            });
            z.picks.clear();
            let mut a = 0.0;
            let mut cost = 0.0;
            for &j in &z.items {
                let aj = row[j as usize];
                let p = price(j);
                let next = a + aj + a0;
                if d * a0 / (next * next) >= p / aj {
                    a += aj;
                    cost += p;
                    z.picks.push((j, 1.0));
                } else {
                    let target = (d * a0 * aj / p).sqrt() - a0;
                    if target > a {
                        let frac = (target - a) / aj;
                        a += aj * frac;
                        cost += p * frac;
                        z.picks.push((j, frac));
                    }
                    break;
                }
            }
            let value = d * capture_rate(a, a0) - cost;
            if value > best {
                best = value;
                std::mem::swap(&mut z.best, &mut z.picks);
            }
        }
        for &(j, frac) in &z.best {
            t[j as usize] = frac;
        }
        best
    }

    /// Dual value at the prices in `w.lam`.
    fn dual(&self, status: &[LockerState], w: &mut Work) -> f64 {
        let inst = self.oracle.inst;
        let (m, n) = (inst.m(), inst.n());
        w.t.fill(0.0);
        w.price.fill(0.0);
        let mut total = 0.0;
        for i in 0..m {
            let range = i * n..(i + 1) * n;
            let lam = &w.lam[range.clone()];
            total += self.zone_value(i, status, lam, &mut w.t[range], &mut w.zone);
            for (p, &l) in w.price.iter_mut().zip(lam) {
                *p += l;
            }
        }
        for j in 0..n {
            let f = self.oracle.costs.get(j);
            w.x[j] = match status[j] {
                LockerState::Open => {
                    total -= f;
                    true
                }
                LockerState::Closed => false,
                LockerState::Free => {
                    let open = w.price[j] > f;
                    if open {
                        total += w.price[j] - f;
                    }
                    open
                }
            };
        }
        total
    }

    fn keep_best(w: &mut Work) {
        w.best_lam.copy_from_slice(&w.lam);
        w.best_price.copy_from_slice(&w.price);
        w.best_x.copy_from_slice(&w.x);
    }

    /// Projected subgradient steps from the prices in `w.lam`. Leaves the
    /// best prices there, with their openings and price sums, and returns
    /// their value.
    fn descend(
        &self,
        status: &[LockerState],
        w: &mut Work,
        iterations: usize,
        target: f64,
        done: impl Fn(f64) -> bool,
    ) -> f64 {
        let n = self.oracle.inst.n();
        let mut value = self.dual(status, w);
        let mut best = value;
        Self::keep_best(w);
        let mut theta = 1.0;
        let mut stall = 0;
        for _ in 0..iterations {
            if done(best) {
                break;
            }
            let mut norm = 0.0;
            for (k, (&l, &t)) in w.lam.iter().zip(&w.t).enumerate() {
                let j = k % n;
                if status[j] != LockerState::Free {
                    continue;
                }
                let g = f64::from(u8::from(w.x[j])) - t;
                if !(l <= 0.0 && g > 0.0) {
                    norm += g * g;
                }
            }
            if norm <= 0.0 {
                break;
            }
            let step = theta * (value - target).max(1e-9 * value.abs().max(1.0)) / norm;
            for (k, (l, &t)) in w.lam.iter_mut().zip(&w.t).enumerate() {
                let j = k % n;
                if status[j] == LockerState::Free {
                    let g = f64::from(u8::from(w.x[j])) - t;
                    *l = (*l - step * g).max(0.0);
                }
            }
            value = self.dual(status, w);
            if value < best {
                best = value;
                Self::keep_best(w);
                stall = 0;
            } else {
                stall += 1;
                if stall >= 20 {
                    theta *= 0.5;
                    stall = 0;
                }
            }
        }
        w.lam.copy_from_slice(&w.best_lam);
        w.price.copy_from_slice(&w.best_price);
        w.x.copy_from_slice(&w.best_x);
        best
    }

    /// Window bound of [`node_bound`] and the profit of opening exactly the
    /// committed-open lockers.
    fn window_bound(&self, status: &[LockerState], w: &mut Work) -> (f64, f64) {
        let inst = self.oracle.inst;
        for (j, &s) in status.iter().enumerate() {
            w.open[j] = s == LockerState::Open;
            w.avail[j] = s != LockerState::Closed;
        }
        let open_cost = self.oracle.cost_of(&w.open);
        let mut completion = -open_cost;
        let mut bound = -open_cost;
        let any_free = status.contains(&LockerState::Free);
        for i in 0..inst.m() {
            let d = inst.demand(i);
            let a0 = inst.outside(i);
            let r = d * capture_rate(self.oracle.zone_best(i, &w.open, &mut w.buf), a0);
            completion += r;
            bound += if any_free {
                d * capture_rate(self.oracle.zone_best(i, &w.avail, &mut w.buf), a0)
            } else {
                r
            };
        }
        (bound, completion)
    }

    /// Bounds a node whose starting prices are already in `w.lam`, fixing
    /// free lockers whose other branch cannot beat the incumbent.
    #[allow(clippy::too_many_arguments)]
    fn evaluate(
        &self,
        mut status: Vec<LockerState>,
        parent_bound: f64,
        w: &mut Work,
        iterations: usize,
        incumbent: f64,
        tol: f64,
        deadline: Option<Instant>,
    ) -> Evaluated {
        let (window, completion) = self.window_bound(&status, w);
        let mut out = Evaluated {
            bound: window.min(parent_bound),
            pruned: f64::NEG_INFINITY,
            alive: false,
            offers: vec![(completion, w.open.clone())],
            suggested: None,
            status: Vec::new(),
        };
        let mut incumbent = incumbent.max(completion);
        if !status.contains(&LockerState::Free) || prunable(out.bound, incumbent, tol) {
            out.pruned = out.bound;
            out.status = status;
            return out;
        }

        if iterations > 0 {
            let lag = self.descend(&status, w, iterations, incumbent, |b| {
                prunable(b, incumbent, tol) || deadline.is_some_and(|d| Instant::now() >= d)
            });
            out.bound = out.bound.min(lag);
            let suggested: Vec<bool> = w.x.clone();
            let value = self.oracle.profit(&suggested, &mut w.buf);
            incumbent = incumbent.max(value);
            out.offers.push((value, suggested.clone()));
            out.suggested = Some(suggested);
            if prunable(out.bound, incumbent, tol) {
                out.pruned = out.bound;
                out.status = status;
                return out;
            }

            let mut fixed = false;
            for j in 0..status.len() {
                if status[j] != LockerState::Free {
                    continue;
                }
                let reduced = w.price[j] - self.oracle.costs.get(j);
                // bound of the subtree taking the other branch for j
                let other = if w.x[j] { lag - reduced } else { lag + reduced };
                if prunable(other, incumbent, tol) {
                    status[j] = if w.x[j] {
                        LockerState::Open
                    } else {
                        LockerState::Closed
                    };
                    out.pruned = out.pruned.max(other);
                    fixed = true;
                }
            }
            if fixed {
                let (window, completion) = self.window_bound(&status, w);
                out.bound = out.bound.min(window);
                out.offers.push((completion, w.open.clone()));
                if !status.contains(&LockerState::Free) {
                    out.pruned = out.pruned.max(completion);
                    out.status = status;
                    return out;
                }
            }
        }
        out.alive = true;
        out.status = status;
        out
    }
}

struct Frontier {
    heap: BinaryHeap<Node>,
    incumbent: f64,
    incumbent_open: Vec<bool>,
    /// Largest bound among nodes discarded by the gap test.
    pruned_bound: f64,
    nodes: u64,
    seq: u64,
    active: usize,
    stored_prices: usize,
    stop: Option<SolveStatus>,
}

impl Frontier {
    fn offer(&mut self, value: f64, open: &[bool]) {
        if value > self.incumbent {
            self.incumbent = value;
            self.incumbent_open = open.to_vec();
        }
    }
}

struct Engine<'a> {
    relaxation: Relaxation<'a>,
    order: Vec<usize>,
    config: &'a SolveConfig,
    price_capacity: usize,
    started: Instant,
    deadline: Option<Instant>,
}

impl<'a> Engine<'a> {
    fn branch_locker(&self, status: &[LockerState]) -> Option<usize> {
        self.order.iter().copied().find(|&j| status[j] == LockerState::Free)
    }

    fn load_prices(&self, prices: Option<&Prices>, w: &mut Work) {
        match prices {
            Some(p) => {
                for (l, &v) in w.lam.iter_mut().zip(p.iter()) {
                    *l = f64::from(v);
                }
            }
            None => w.lam.copy_from_slice(&self.relaxation.root),
        }
    }

    fn worker(&self, shared: &Mutex<Frontier>, wake: &Condvar) {
        let inst = self.relaxation.oracle.inst;
        let mut work = Work::new(inst.m(), inst.n());
        let tol = self.config.gap_tolerance;
        loop {
            let (node, mut incumbent) = {
                let mut f = shared.lock().expect("frontier lock");
                loop {
                    if f.stop.is_some() {
                        wake.notify_all();
                        return;
                    }
                    if f.heap.is_empty() && f.active == 0 {
                        f.stop = Some(SolveStatus::Optimal);
                        continue;
                    }
                    if self.deadline.is_some_and(|d| Instant::now() >= d) {
                        f.stop = Some(SolveStatus::TimeLimit);
                        continue;
                    }
                    if self.config.node_limit.is_some_and(|l| f.nodes >= l) {
                        f.stop = Some(SolveStatus::NodeLimit);
                        continue;
                    }
                    if let Some(node) = f.heap.pop() {
                        if node.prices.is_some() {
                            f.stored_prices -= 1;
                        }
                        if prunable(node.bound, f.incumbent, tol) {
                            f.pruned_bound = f.pruned_bound.max(node.bound);
                            continue;
                        }
                        f.nodes += 1;
                        f.active += 1;
                        let inc = f.incumbent;
                        break (node, inc);
                    }
                    f = wake.wait(f).expect("frontier lock");
                }
            };

            let j = self
                .branch_locker(&node.status)
                .expect("queued nodes always have a free locker");
            let mut children = Vec::with_capacity(2);
            let mut pruned = f64::NEG_INFINITY;
            for state in [LockerState::Open, LockerState::Closed] {
                let mut status = node.status.clone();
                status[j] = state;
                self.load_prices(node.prices.as_ref(), &mut work);
                let eval = self.relaxation.evaluate(
                    status,
                    node.bound,
                    &mut work,
                    self.config.bound_iterations,
                    incumbent,
                    tol,
                    self.deadline,
                );
                for (value, open) in &eval.offers {
                    if *value > incumbent {
                        incumbent = *value;
                        shared.lock().expect("frontier lock").offer(*value, open);
                    }
                }
                pruned = pruned.max(eval.pruned);
                if eval.alive {
                    let prices: Prices = work.lam.iter().map(|&l| l as f32).collect();
                    children.push((eval.status, eval.bound, prices));
                }
            }

            let mut f = shared.lock().expect("frontier lock");
            f.pruned_bound = f.pruned_bound.max(pruned);
            for (status, bound, prices) in children {
                if prunable(bound, f.incumbent, tol) {
                    f.pruned_bound = f.pruned_bound.max(bound);
                    continue;
                }
                let prices = if self.config.bound_iterations > 0 && f.stored_prices < self.price_capacity {
                    f.stored_prices += 1;
                    Some(prices)
                } else {
                    None
                };
                f.seq += 1;
                let seq = f.seq;
                f.heap.push(Node {
                    status,
                    bound,
                    seq,
                    prices,
                });
            }
            f.active -= 1;
            wake.notify_all();
        }
    }
}

/// Best-first branch-and-bound over location variables.
pub fn solve_bb(inst: &Instance, costs: &Costs, config: &SolveConfig) -> Result<SolveResult> {
    solve_bb_from(inst, costs, config, &[])
}

/// [`solve_bb`] with extra starting incumbents.
pub fn solve_bb_from(
    inst: &Instance,
    costs: &Costs,
    config: &SolveConfig,
    starts: &[LocationDecision],
) -> Result<SolveResult> {
    costs.check(inst)?;
    config.validate()?;
    let started = Instant::now();
    let deadline = config
        .time_limit_seconds
        .map(|t| started + Duration::from_secs_f64(t));
    let (m, n) = (inst.m(), inst.n());
    let oracle = Oracle::new(inst, costs);

    let mut order: Vec<usize> = (0..n).collect();
    if config.branching_rule == BranchingRule::MaxDemandWeightedAttraction {
        let weight: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| inst.demand(i) * inst.attraction(i, j)).sum())
            .collect();
        order.sort_by(|&a, &b| weight[b].total_cmp(&weight[a]).then(a.cmp(&b)));
    }

    let mut incumbent_open = vec![false; n];
    let mut buf = Vec::new();
    let mut incumbent = oracle.profit(&incumbent_open, &mut buf);
    let greedy = config.heuristic == Heuristic::GreedyLocalSearch && n > 0;
    if greedy {
        let (open, value) = local_search(&oracle, vec![false; n]);
        if value > incumbent {
            incumbent = value;
            incumbent_open = open;
        }
    }

    for start in starts {
        if start.open.len() != n {
            return Err(Error::Contract(format!(
                "starting location has {} entries, instance has {n} lockers",
                start.open.len()
            )));
        }
        let value = oracle.profit(&start.open, &mut buf);
        if value > incumbent {
            incumbent = value;
            incumbent_open = start.open.clone();
        }
    }

    let mut relaxation = Relaxation::new(oracle);
    let mut frontier = Frontier {
        heap: BinaryHeap::new(),
        incumbent,
        incumbent_open,
        pruned_bound: f64::NEG_INFINITY,
        nodes: 0,
        seq: 0,
        active: 0,
        stored_prices: 0,
        stop: None,
    };

    if n > 0 {
        let tol = config.gap_tolerance;
        let mut work = Work::new(m, n);
        work.lam.copy_from_slice(&relaxation.root);
        let root = relaxation.evaluate(
            vec![LockerState::Free; n],
            f64::INFINITY,
            &mut work,
            config.bound_iterations * 100,
            incumbent,
            tol,
            deadline,
        );
        relaxation.root.copy_from_slice(&work.lam);
        for (value, open) in &root.offers {
            frontier.offer(*value, open);
        }
        if greedy {
            if let Some(start) = root.suggested {
                let (open, value) = local_search(&relaxation.oracle, start);
                frontier.offer(value, &open);
            }
        }
        frontier.pruned_bound = root.pruned;
        if root.alive {
            if prunable(root.bound, frontier.incumbent, tol) {
                frontier.pruned_bound = frontier.pruned_bound.max(root.bound);
            } else {
                frontier.heap.push(Node {
                    status: root.status,
                    bound: root.bound,
                    seq: 0,
                    prices: None,
                });
            }
        }
    }

    let engine = Engine {
        relaxation,
        order,
        config,
        price_capacity: PRICE_MEMORY_BYTES / (4 * (m * n).max(1)),
        started,
        deadline,
    };
    let shared = Mutex::new(frontier);
    let wake = Condvar::new();
    if config.threads <= 1 {
        engine.worker(&shared, &wake);
    } else {
        std::thread::scope(|scope| {
            for _ in 0..config.threads {
                scope.spawn(|| engine.worker(&shared, &wake));
            }
        });
    }
    let frontier = shared.into_inner().expect("frontier lock");

    let open_bound = frontier
        .heap
        .iter()
        .map(|node| node.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    let upper_bound = frontier
        .incumbent
        .max(frontier.pruned_bound)
        .max(open_bound);
    let mut status = frontier.stop.unwrap_or(SolveStatus::Optimal);
    if status == SolveStatus::Optimal
        && upper_bound - frontier.incumbent > 1e-9 * upper_bound.abs().max(1.0)
    {
        status = SolveStatus::GapLimit;
    }
    finish(
        inst,
        costs,
        frontier.incumbent_open,
        upper_bound,
        frontier.nodes,
        engine.started,
        status,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bb,
    Bruteforce,
}

pub fn solve(inst: &Instance, costs: &Costs, method: Method, config: &SolveConfig) -> Result<SolveResult> {
    match method {
        Method::Bb => solve_bb(inst, costs, config),
        Method::Bruteforce => solve_bruteforce(inst, costs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::tests::worked_example;

    fn single_zone(attractions: Vec<f64>, gamma: f64) -> Instance {
        let n = attractions.len();
        Instance::new(vec![1.0], vec![0.0; n], vec![attractions], vec![1.0], gamma).unwrap()
    }

    #[test]
    fn window_beats_single_attractive_locker() {
        let inst = worked_example(0.5);
        assert_eq!(best_restriction(&inst, 0, &[0, 1, 2]), (vec![0, 1], 4.0));
        assert_eq!(best_restriction(&inst, 0, &[2]), (vec![2], 3.1));
        assert_eq!(best_restriction(&inst, 0, &[]), (vec![], 0.0));
    }

    #[test]
    fn window_on_four_lockers() {
        // enumerating the 15 nonempty subsets: antichains need max <= 1.2 min;
        // {6, 5} with sum 11 is the best
        let inst = single_zone(vec![10.0, 6.0, 5.0, 1.0], 0.2);
        assert_eq!(best_restriction(&inst, 0, &[0, 1, 2, 3]), (vec![1, 2], 11.0));
    }

    #[test]
    fn node_bound_examples() {
        let inst = worked_example(0.5);
        let costs = Costs::uniform(3, 0.0).unwrap();
        let root = NodeState::root(3);
        assert!((node_bound(&inst, &costs, &root) - 50.0).abs() < 1e-12);

        let costs = Costs::uniform(3, 0.1).unwrap();
        let leaf = NodeState::from_sets(3, &[0, 2], &[1]).unwrap();
        let exact = evaluate_location(&inst, &costs, &LocationDecision::from_set(3, &[0, 2])).unwrap();
        assert!((node_bound(&inst, &costs, &leaf) - exact.profit).abs() < 1e-12);

        let parent = NodeState::from_sets(3, &[2], &[]).unwrap();
        let child = NodeState::from_sets(3, &[2], &[0]).unwrap();
        assert!(node_bound(&inst, &costs, &child) <= node_bound(&inst, &costs, &parent));
    }

    #[test]
    fn node_state_rejects_overlap() {
        assert!(NodeState::from_sets(3, &[0, 1], &[1]).is_err());
        let node = NodeState::from_sets(4, &[0], &[3]).unwrap();
        assert_eq!(node.free(), vec![1, 2]);
        assert_eq!(node.committed_open(), vec![0]);
        assert_eq!(node.committed_closed(), vec![3]);
    }

    #[test]
    fn worked_example_with_small_costs() {
        let inst = worked_example(0.5);
        let costs = Costs::uniform(3, 0.1).unwrap();
        let brute = solve_bruteforce(&inst, &costs).unwrap();
        assert_eq!(brute.location.open_set(), vec![0, 1]);
        assert!((brute.profit - 49.8).abs() < 1e-12);
        let bb = solve_bb(&inst, &costs, &SolveConfig::exact()).unwrap();
        assert!((bb.profit - 49.8).abs() < 1e-12);
        assert_eq!(bb.status, SolveStatus::Optimal);
        assert!(bb.upper_bound >= bb.profit - 1e-9);
        let greedy = greedy_local_search(&inst, &costs).unwrap();
        assert_eq!(greedy.open_set(), vec![0, 1]);
        let value = evaluate_location(&inst, &costs, &greedy).unwrap().profit;
        assert!((value - 49.8).abs() < 1e-12);
    }

    #[test]
    fn zero_cost_example_reaches_fifty() {
        let inst = worked_example(0.5);
        let costs = Costs::uniform(3, 0.0).unwrap();
        assert!((solve_bruteforce(&inst, &costs).unwrap().profit - 50.0).abs() < 1e-12);
    }

    #[test]
    fn expensive_lockers_stay_closed() {
        let inst = worked_example(0.5);
        let costs = Costs::uniform(3, 1000.0).unwrap();
        let r = solve_bb(&inst, &costs, &SolveConfig::default()).unwrap();
        assert_eq!(r.location.count(), 0);
        assert_eq!(r.profit, 0.0);
        assert!(greedy_local_search(&inst, &costs).unwrap().open_set().is_empty());
    }

    #[test]
    fn mnl_without_costs_opens_everything() {
        let inst = worked_example(f64::INFINITY);
        let costs = Costs::uniform(3, 0.0).unwrap();
        let r = solve_bb(&inst, &costs, &SolveConfig::exact()).unwrap();
        assert_eq!(r.location.count(), 3);
        assert!((r.revenue - 100.0 * 7.1 / 11.1).abs() < 1e-12);
    }

    #[test]
    fn no_lockers() {
        let inst = Instance::new(vec![3.0], vec![], vec![vec![]], vec![1.0], 0.0).unwrap();
        let costs = Costs::uniform(0, 0.0).unwrap();
        assert_eq!(solve_bruteforce(&inst, &costs).unwrap().profit, 0.0);
        assert_eq!(solve_bb(&inst, &costs, &SolveConfig::default()).unwrap().profit, 0.0);
    }

    #[test]
    fn brute_force_guard() {
        let n = BRUTE_FORCE_MAX_LOCKERS + 1;
        let inst = single_zone(vec![1.0; n], 0.0);
        let costs = Costs::uniform(n, 0.0).unwrap();
        assert!(matches!(solve_bruteforce(&inst, &costs), Err(Error::TooLarge(_))));
    }

    #[test]
    fn gap_definition() {
        assert_eq!(relative_gap(100.0, 99.0), 0.01);
        assert_eq!(relative_gap(0.0, 0.0), 0.0);
    }

    #[test]
    fn lagrangian_dual_bounds_every_completion_for_any_prices() {
        let mut rng = crate::rng::UniformStream::new(17);
        for gamma in [0.0, 0.3, 1.0, f64::INFINITY] {
            let (m, n) = (4, 6);
            let attraction = (0..m)
                .map(|_| (0..n).map(|_| rng.next_range(0.1, 3.0)).collect())
                .collect();
            let inst = Instance::new(vec![20.0; m], vec![0.0; n], attraction, vec![1.5; m], gamma).unwrap();
            let costs = Costs::new((0..n).map(|_| rng.next_range(0.0, 6.0)).collect()).unwrap();
            let relax = Relaxation::new(Oracle::new(&inst, &costs));
            let mut w = Work::new(m, n);
            let mut buf = Vec::new();
            for trial in 0..30 {
                let status: Vec<LockerState> = (0..n)
                    .map(|_| match (rng.next_unit() * 3.0) as u8 {
                        0 => LockerState::Free,
                        1 => LockerState::Open,
                        _ => LockerState::Closed,
                    })
                    .collect();
                for l in w.lam.iter_mut() {
                    *l = if trial == 0 { 0.0 } else { rng.next_range(0.0, 4.0) };
                }
                let dual = relax.dual(&status, &mut w);
                let free: Vec<usize> = (0..n).filter(|&j| status[j] == LockerState::Free).collect();
                for mask in 0u32..1 << free.len() {
                    let mut open: Vec<bool> = status.iter().map(|&s| s == LockerState::Open).collect();
                    for (b, &j) in free.iter().enumerate() {
                        open[j] = mask >> b & 1 == 1;
                    }
                    let value = relax.oracle.profit(&open, &mut buf);
                    assert!(dual >= value - 1e-9, "gamma {gamma}: dual {dual} < {value}");
                }
            }
        }
    }
}
