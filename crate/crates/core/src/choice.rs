//! Threshold Luce choice rule: dominance, consideration sets, choice
//! probabilities and the profit of a location/restriction pair.
//!
//! Locker `j` dominates locker `k` for zone `i` when
//! `a_ij > (1 + gamma) * a_ik` (strict). A customer offered the set `S_i`
//! discards every dominated locker and picks among the rest, or the outside
//! option, proportionally to attraction. With `gamma = inf` nothing is ever
//! dominated (multinomial logit); with `gamma = 0` only the most attractive
//! offered locker survives, ties excepted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Costs, Instance};

/// Which lockers are open (`x_j`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocationDecision {
    pub open: Vec<bool>,
}

impl LocationDecision {
    pub fn closed(n: usize) -> Self {
        Self { open: vec![false; n] }
    }

    pub fn all_open(n: usize) -> Self {
        Self { open: vec![true; n] }
    }

    pub fn from_set(n: usize, open: &[usize]) -> Self {
        let mut out = Self::closed(n);
        for &j in open {
            out.open[j] = true;
        }
        out
    }

    pub fn open_set(&self) -> Vec<usize> {
        self.open.iter().enumerate().filter(|(_, &o)| o).map(|(j, _)| j).collect()
    }

    pub fn count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }
}

/// Which open lockers each zone may use (`y_ij`), one row per zone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictionDecision {
    pub allowed: Vec<Vec<bool>>,
}

impl RestrictionDecision {
    pub fn empty(m: usize, n: usize) -> Self {
        Self {
            allowed: vec![vec![false; n]; m],
        }
    }

    pub fn from_sets(n: usize, sets: &[Vec<usize>]) -> Self {
        let allowed = sets
            .iter()
            .map(|s| {
                let mut row = vec![false; n];
                for &j in s {
                    row[j] = true;
                }
                row
            })
            .collect();
        Self { allowed }
    }

    pub fn zone_set(&self, zone: usize) -> Vec<usize> {
        self.allowed[zone]
            .iter()
            .enumerate()
            .filter(|(_, &y)| y)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Choice probabilities per zone: `locker[i][j]` is `p_ij`, `outside[i]` is `p_i0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceDistribution {
    pub locker: Vec<Vec<f64>>,
    pub outside: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitBreakdown {
    pub revenue: f64,
    pub facility_cost: f64,
    pub profit: f64,
    /// Expected demand captured by the outside option, `sum_i d_i / z_i`.
    pub lost_demand: f64,
    pub per_zone_revenue: Vec<f64>,
}

/// Share of a zone's demand captured when the offered lockers sum to `attraction`.
pub fn capture_rate(attraction: f64, outside: f64) -> f64 {
    attraction / (attraction + outside)
}

/// `Omega_ij`: lockers dominated by `locker` for `zone`, ascending.
pub fn dominated_set(inst: &Instance, zone: usize, locker: usize) -> Vec<usize> {
    (0..inst.n()).filter(|&k| inst.dominates(zone, locker, k)).collect()
}

/// `c_i(S_i)`: members of `offered` not dominated by another member.
pub fn nondominated_set(inst: &Instance, zone: usize, offered: &[usize]) -> Vec<usize> {
    let Some(best) = offered
        .iter()
        .map(|&k| inst.attraction(zone, k))
        .max_by(f64::total_cmp)
    else {
        return Vec::new();
    };
    // j survives iff no member dominates it, i.e. the maximum does not.
    let factor = inst.dominance_factor();
    let mut out: Vec<usize> = offered
        .iter()
        .copied()
        .filter(|&j| !(best > factor * inst.attraction(zone, j)))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Checks that `set` is pairwise non-dominating for `zone`. A set is an
/// antichain exactly when its largest attraction does not dominate its smallest.
pub fn check_antichain(inst: &Instance, zone: usize, set: &[usize]) -> Result<()> {
    let cmp = |&a: &usize, &b: &usize| {
        inst.attraction(zone, a)
            .total_cmp(&inst.attraction(zone, b))
            .then(a.cmp(&b))
    };
    let (Some(lo), Some(hi)) = (set.iter().min_by(|a, b| cmp(a, b)), set.iter().max_by(|a, b| cmp(a, b)))
    else {
        return Ok(());
    };
    if inst.dominates(zone, *hi, *lo) {
        return Err(Error::Contract(format!(
            "zone {zone}: locker {hi} dominates locker {lo} but both are allowed"
        )));
    }
    Ok(())
}

pub fn is_antichain(inst: &Instance, zone: usize, set: &[usize]) -> bool {
    check_antichain(inst, zone, set).is_ok()
}

fn check_shape(inst: &Instance, restriction: &RestrictionDecision) -> Result<()> {
    if restriction.allowed.len() != inst.m() || restriction.allowed.iter().any(|r| r.len() != inst.n()) {
        return Err(Error::Contract(format!(
            "restriction must be {} x {}",
            inst.m(),
            inst.n()
        )));
    }
    Ok(())
}

pub fn choice_probabilities(inst: &Instance, restriction: &RestrictionDecision) -> Result<ChoiceDistribution> {
    check_shape(inst, restriction)?;
    let mut locker = Vec::with_capacity(inst.m());
    let mut outside = Vec::with_capacity(inst.m());
    for i in 0..inst.m() {
        let set = restriction.zone_set(i);
        check_antichain(inst, i, &set)?;
        let a0 = inst.outside(i);
        let denom = set.iter().map(|&j| inst.attraction(i, j)).sum::<f64>() + a0;
        let mut row = vec![0.0; inst.n()];
        for &j in &set {
            row[j] = inst.attraction(i, j) / denom;
        }
        locker.push(row);
        outside.push(a0 / denom);
    }
    Ok(ChoiceDistribution { locker, outside })
}

/// Revenue, cost and profit of a location decision with the given per-zone
/// restriction. Every allowed locker must be open and each zone's allowed
/// set must be an antichain.
pub fn profit(
    inst: &Instance,
    location: &LocationDecision,
    restriction: &RestrictionDecision,
    costs: &Costs,
) -> Result<ProfitBreakdown> {
    costs.check(inst)?;
    check_shape(inst, restriction)?;
    if location.open.len() != inst.n() {
        return Err(Error::Contract(format!(
            "location decision has {} entries for {} lockers",
            location.open.len(),
            inst.n()
        )));
    }
    let mut per_zone_revenue = Vec::with_capacity(inst.m());
    let mut lost_demand = 0.0;
    for i in 0..inst.m() {
        let set = restriction.zone_set(i);
        if let Some(&j) = set.iter().find(|&&j| !location.open[j]) {
            return Err(Error::Contract(format!(
                "zone {i} is allowed locker {j} which is not open"
            )));
        }
        check_antichain(inst, i, &set)?;
        let a: f64 = set.iter().map(|&j| inst.attraction(i, j)).sum();
        let a0 = inst.outside(i);
        let d = inst.demand(i);
        per_zone_revenue.push(d * capture_rate(a, a0));
        lost_demand += d * a0 / (a + a0);
    }
    let revenue = per_zone_revenue.iter().sum::<f64>();
    let facility_cost = location
        .open
        .iter()
        .enumerate()
        .filter(|(_, &o)| o)
        .map(|(j, _)| costs.get(j))
        .sum::<f64>();
    Ok(ProfitBreakdown {
        revenue,
        facility_cost,
        profit: revenue - facility_cost,
        lost_demand,
        per_zone_revenue,
    })
}

/// Restriction obtained when every zone is offered all open lockers and
/// customers drop the dominated ones themselves (no operator restriction).
pub fn unrestricted(inst: &Instance, location: &LocationDecision) -> RestrictionDecision {
    let open = location.open_set();
    let sets: Vec<Vec<usize>> = (0..inst.m()).map(|i| nondominated_set(inst, i, &open)).collect();
    RestrictionDecision::from_sets(inst.n(), &sets)
}
