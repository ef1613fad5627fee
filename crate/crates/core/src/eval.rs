//! Comparison metrics between choice models and parameter sweeps.
//!
//! * `delta`: how much the MNL model overstates revenue relative to a
//!   threshold model, `(R_mnl - R_tlm) / R_tlm * 100`.
//! * `rel_loss`: profit forfeited by opening the MNL-optimal lockers when
//!   customers actually follow the threshold model.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::choice::{self, LocationDecision};
use crate::error::{Error, Result};
use crate::instance::{Costs, Instance};
use crate::solver::{self, evaluate_location, Method, SolveConfig, SolveResult};

/// `BNL` for `gamma = 0`, `MNL` for infinity, `TLM-<gamma>` otherwise.
pub fn gamma_label(gamma: f64) -> String {
    if gamma == 0.0 {
        "BNL".to_string()
    } else if gamma.is_infinite() {
        "MNL".to_string()
    } else {
        format!("TLM-{gamma}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub gamma_label: String,
    pub profit: f64,
    pub revenue: f64,
    pub facility_count: usize,
    /// Revenue overestimate of MNL against this model; zero for MNL itself.
    pub delta_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub gamma: f64,
    pub optimal_profit: f64,
    pub actual_profit: f64,
    pub rel_loss_percent: f64,
}

/// `(r_mnl - r_tlm) / r_tlm * 100`.
pub fn delta_percent(r_mnl: f64, r_tlm: f64) -> Result<f64> {
    if r_tlm == 0.0 || !r_tlm.is_finite() {
        return Err(Error::UndefinedMetric(format!(
            "revenue overestimate needs a nonzero reference revenue (got {r_tlm})"
        )));
    }
    Ok((r_mnl - r_tlm) / r_tlm * 100.0)
}

/// `(optimal - actual) / optimal * 100`.
pub fn rel_loss(optimal_profit: f64, actual_profit: f64) -> Result<f64> {
    if !(optimal_profit > 0.0) {
        return Err(Error::UndefinedMetric(format!(
            "relative loss needs a positive optimal profit (got {optimal_profit})"
        )));
    }
    Ok((optimal_profit - actual_profit) / optimal_profit * 100.0)
}

/// Profit of `location` when customers follow the threshold model with
/// `gamma` and each zone's restriction is re-optimized over the open lockers.
pub fn actual_profit(inst: &Instance, gamma: f64, location: &LocationDecision, costs: &Costs) -> Result<f64> {
    let tlm = inst.with_gamma(gamma)?;
    check_len(&tlm, location)?;
    Ok(evaluate_location(&tlm, costs, location)?.profit)
}

/// Profit of `location` when every zone is offered all open lockers, so
/// customers choose among the nondominated ones.
pub fn unrestricted_profit(inst: &Instance, location: &LocationDecision, costs: &Costs) -> Result<f64> {
    check_len(inst, location)?;
    let y = choice::unrestricted(inst, location);
    Ok(choice::profit(inst, location, &y, costs)?.profit)
}

fn check_len(inst: &Instance, location: &LocationDecision) -> Result<()> {
    if location.open.len() != inst.n() {
        return Err(Error::Contract(format!(
            "location has {} entries, instance has {} lockers",
            location.open.len(),
            inst.n()
        )));
    }
    Ok(())
}

fn record(label: String, r: &SolveResult, delta_percent: f64) -> ComparisonRecord {
    ComparisonRecord {
        gamma_label: label,
        profit: r.profit,
        revenue: r.revenue,
        facility_count: r.location.count(),
        delta_percent,
    }
}

/// Solves the instance under MNL and under `gamma`, returning the MNL
/// record and the threshold-model record carrying the revenue overestimate.
pub fn delta(
    inst: &Instance,
    gamma: f64,
    costs: &Costs,
    method: Method,
    config: &SolveConfig,
) -> Result<(ComparisonRecord, ComparisonRecord)> {
    let mnl = solver::solve(&inst.with_gamma(f64::INFINITY)?, costs, method, config)?;
    let tlm = solver::solve(&inst.with_gamma(gamma)?, costs, method, config)?;
    let d = delta_percent(mnl.revenue, tlm.revenue)?;
    Ok((
        record(gamma_label(f64::INFINITY), &mnl, 0.0),
        record(gamma_label(gamma), &tlm, d),
    ))
}

/// Optimal profit under `gamma` against the profit of the MNL-optimal
/// locations evaluated under `gamma`.
pub fn loss(inst: &Instance, gamma: f64, costs: &Costs, method: Method, config: &SolveConfig) -> Result<LossRecord> {
    let mnl = solver::solve(&inst.with_gamma(f64::INFINITY)?, costs, method, config)?;
    let tlm_inst = inst.with_gamma(gamma)?;
    let optimal = solve_seeded(&tlm_inst, costs, method, config, &mnl.location)?;
    let actual = actual_profit(inst, gamma, &mnl.location, costs)?;
    Ok(LossRecord {
        gamma,
        optimal_profit: optimal.profit,
        actual_profit: actual,
        rel_loss_percent: rel_loss(optimal.profit, actual)?,
    })
}

fn solve_seeded(
    inst: &Instance,
    costs: &Costs,
    method: Method,
    config: &SolveConfig,
    start: &LocationDecision,
) -> Result<SolveResult> {
    match method {
        Method::Bb => solver::solve_bb_from(inst, costs, config, std::slice::from_ref(start)),
        Method::Bruteforce => solver::solve_bruteforce(inst, costs),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Gamma,
    Alpha,
    Xi,
    /// Uniform facility cost.
    F,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Gamma => "gamma",
            SweepParam::Alpha => "alpha",
            SweepParam::Xi => "xi",
            SweepParam::F => "f",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "gamma" => Ok(SweepParam::Gamma),
            "alpha" => Ok(SweepParam::Alpha),
            "xi" => Ok(SweepParam::Xi),
            "f" | "cost" => Ok(SweepParam::F),
            other => Err(Error::validation("vary", format!("unknown parameter {other:?}"))),
        }
    }
}

/// One CSV row. Optional metrics are left empty when undefined or not requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub param_name: String,
    pub param_value: f64,
    pub profit: Option<f64>,
    pub revenue: Option<f64>,
    pub facility_count: Option<usize>,
    pub gap: Option<f64>,
    pub status: String,
    pub wall_time_s: f64,
    pub delta_pct: Option<f64>,
    pub rel_loss_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub method: Method,
    pub config: SolveConfig,
    /// Also solve each point under MNL and fill `delta_pct` and `rel_loss_pct`.
    pub compare_mnl: bool,
}

/// Instance and costs at one sweep point.
pub fn sweep_point(base: &Instance, base_cost: f64, param: SweepParam, value: f64) -> Result<(Instance, Costs)> {
    let n = base.n();
    match param {
        SweepParam::Gamma => Ok((base.with_gamma(value)?, Costs::uniform(n, base_cost)?)),
        SweepParam::Xi => Ok((base.with_xi(value)?, Costs::uniform(n, base_cost)?)),
        SweepParam::Alpha => {
            let geo = base.with_geometry_from_meta()?;
            Ok((geo.with_alpha(value)?, Costs::uniform(n, base_cost)?))
        }
        SweepParam::F => Ok((base.clone(), Costs::uniform(n, value)?)),
    }
}

/// Solves one instance per parameter value. A failing point yields a record
/// whose status names the error; the sweep continues. Records come back
/// sorted by parameter value.
pub fn sweep(base: &Instance, base_cost: f64, param: SweepParam, values: &[f64], opts: &SweepOptions) -> Result<Vec<SweepRecord>> {
    if values.is_empty() {
        return Err(Error::validation("values", "at least one value is required"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::validation("values", "NaN is not a parameter value"));
    }
    let base = if param == SweepParam::Alpha {
        base.with_geometry_from_meta()?
    } else {
        base.clone()
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted
        .into_iter()
        .map(|value| {
            let started = Instant::now();
            let mut rec = SweepRecord {
                param_name: param.name().to_string(),
                param_value: value,
                profit: None,
                revenue: None,
                facility_count: None,
                gap: None,
                status: String::new(),
                wall_time_s: 0.0,
                delta_pct: None,
                rel_loss_pct: None,
            };
            if let Err(e) = fill_point(&base, base_cost, param, value, opts, &mut rec) {
                rec.status = format!("ERROR: {e}");
            }
            rec.wall_time_s = started.elapsed().as_secs_f64();
            rec
        })
        .collect())
}

fn fill_point(
    base: &Instance,
    base_cost: f64,
    param: SweepParam,
    value: f64,
    opts: &SweepOptions,
    rec: &mut SweepRecord,
) -> Result<()> {
    let (inst, costs) = sweep_point(base, base_cost, param, value)?;
    let mnl = if opts.compare_mnl && !inst.is_mnl() {
        Some(solver::solve(&inst.with_gamma(f64::INFINITY)?, &costs, opts.method, &opts.config)?)
    } else {
        None
    };
    let r = match &mnl {
        Some(m) => solve_seeded(&inst, &costs, opts.method, &opts.config, &m.location)?,
        None => solver::solve(&inst, &costs, opts.method, &opts.config)?,
    };
    rec.profit = Some(r.profit);
    rec.revenue = Some(r.revenue);
    rec.facility_count = Some(r.location.count());
    rec.gap = Some(r.gap);
    rec.status = r.status.label().to_string();
    if opts.compare_mnl {
        let (r_mnl, actual) = match &mnl {
            Some(m) => (m.revenue, evaluate_location(&inst, &costs, &m.location)?.profit),
            None => (r.revenue, r.profit),
        };
        rec.delta_pct = delta_percent(r_mnl, r.revenue).ok();
        rec.rel_loss_pct = rel_loss(r.profit, actual).ok();
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(writer: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record([
            "param_name",
            "param_value",
            "profit",
            "revenue",
            "facility_count",
            "gap",
            "status",
            "wall_time_s",
            "delta_pct",
            "rel_loss_pct",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_sweep_csv(path: impl AsRef<Path>, records: &[SweepRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_sweep_csv(std::io::BufWriter::new(file), records)
}

pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
