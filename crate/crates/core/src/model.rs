//! Integer and conic formulations of the location problem, kept as plain
//! constraint systems that can be evaluated, checked and written out.
//!
//! Three kinds are built:
//!
//! * `IP_D`: linking rows `y_ij <= x_j` plus one pairwise row
//!   `y_ij + y_ik <= 1` for every dominance pair.
//! * `IP_A`: linking rows, one aggregated row
//!   `sum_{k in Omega_ij} y_ik + |Omega_ij| y_ij <= |Omega_ij|` per dominating
//!   locker, and one longest-path row `sum_{j in path} y_ij <= 1` per zone.
//! * `MICQP`: minimizes `sum_i d_i b_i + sum_j f_j x_j` subject to
//!   `z_i = 1 + sum_j (a_ij / a_i0) y_ij`, `0 <= b_i <= 1`, the rotated cone
//!   `b_i z_i >= 1` and either dominance block.
//!
//! The integer kinds keep their fractional revenue term as a descriptor
//! instead of linearizing it.
//!
//! # Variable names
//!
//! `x_j`, `y_i_j`, `b_i`, `z_i`, all 1-based. Row names follow the same
//! scheme: `link_i_j`, `ddc_i_j_k`, `adc_i_j`, `path_i` (`path_i_r` for
//! additional paths), `zdef_i`, `cone_i`.
//!
//! # Export formats
//!
//! `LP_TEXT` is the usual LP-file subset (`Maximize`/`Minimize`,
//! `Subject To`, `Bounds`, `Binaries`, `End`). Cones cannot be written as
//! linear rows; they appear as `\`-comments and the export carries a warning.
//!
//! `CONIC_TEXT` is a line-oriented block format:
//!
//! ```text
//! CONIC_TEXT v1
//! kind <IP_D|IP_A|MICQP>
//! dominance <DDC|ADC_PATH>
//! variables <count>
//! <name> <binary|continuous> <lower> <upper|inf>
//! objective <maximize|minimize> <constant> <term count>
//! <name> <coefficient>
//! fractional <count>
//! <zone> <demand> <outside> <term count> <name> <coefficient> ...
//! rows <count>
//! <name> <le|ge|eq> <rhs> <term count> <name> <coefficient> ...
//! cones <count>
//! <name> <b variable> <z variable>
//! end
//! ```
//!
//! A cone line `c b z` means `b * z >= 1` with `b, z >= 0`, equivalently
//! `||(2, z - b)||_2 <= z + b`. A fractional line adds
//! `demand * A / (A + outside)` to the objective, `A` being the listed sum.
//!
//! `JSON` is the serde encoding of [`Formulation`] and can be read back.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::choice::{dominated_set, LocationDecision, RestrictionDecision};
use crate::domgraph::DominanceGraph;
use crate::error::{Error, Result};
use crate::instance::{Costs, Instance};
use crate::jsonfmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FormulationKind {
    IpD,
    IpA,
    Micqp,
}

impl FormulationKind {
    pub fn label(self) -> &'static str {
        match self {
            FormulationKind::IpD => "IP_D",
            FormulationKind::IpA => "IP_A",
            FormulationKind::Micqp => "MICQP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DominanceBlock {
    /// Pairwise rows.
    Ddc,
    /// Aggregated rows plus longest-path rows.
    AdcPath,
}

impl DominanceBlock {
    pub fn label(self) -> &'static str {
        match self {
            DominanceBlock::Ddc => "DDC",
            DominanceBlock::AdcPath => "ADC_PATH",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ModelOptions {
    /// Also add the longest-path row of every zone to the pairwise block.
    pub paths_with_ddc: bool,
    /// Additional vertex-disjoint long paths per zone beyond the longest one.
    pub extra_paths: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarType {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub var_type: VarType,
    pub lower: f64,
    /// `None` means unbounded above.
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn lp(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    fn word(self) -> &'static str {
        match self {
            Sense::Le => "le",
            Sense::Ge => "ge",
            Sense::Eq => "eq",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Link,
    Ddc,
    Adc,
    Path,
    ZDef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub name: String,
    pub kind: RowKind,
    /// Zone the row belongs to (0-based).
    pub zone: usize,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearRow {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v]).sum()
    }

    pub fn is_satisfied(&self, values: &[f64], tol: f64) -> bool {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => lhs <= self.rhs + tol,
            Sense::Ge => lhs >= self.rhs - tol,
            Sense::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

/// Rotated second-order cone `b * z >= 1`, `b, z >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeRow {
    pub name: String,
    pub zone: usize,
    pub b: usize,
    pub z: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveSense {
    Maximize,
    Minimize,
}

/// `demand * A / (A + outside)` with `A = sum_terms coefficient * value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalTerm {
    pub zone: usize,
    pub demand: f64,
    pub outside: f64,
    pub terms: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub sense: ObjectiveSense,
    pub constant: f64,
    pub linear: Vec<(usize, f64)>,
    #[serde(default)]
    pub fractional: Vec<FractionalTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Formulation {
    pub kind: FormulationKind,
    pub dominance: DominanceBlock,
    pub zones: usize,
    pub lockers: usize,
    pub variables: Vec<Variable>,
    pub objective: Objective,
    pub rows: Vec<LinearRow>,
    pub cones: Vec<ConeRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    LpText,
    ConicText,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Export {
    pub text: String,
    pub warnings: Vec<String>,
}

struct Layout {
    m: usize,
    n: usize,
}

impl Layout {
    fn x(&self, j: usize) -> usize {
        j
    }
    fn y(&self, i: usize, j: usize) -> usize {
        self.n + i * self.n + j
    }
    fn b(&self, i: usize) -> usize {
        self.n + self.m * self.n + i
    }
    fn z(&self, i: usize) -> usize {
        self.n + self.m * self.n + self.m + i
    }
}

fn base_variables(m: usize, n: usize) -> Vec<Variable> {
    let bin = |name: String| Variable {
        name,
        var_type: VarType::Binary,
        lower: 0.0,
        upper: Some(1.0),
    };
    let mut vars: Vec<Variable> = (0..n).map(|j| bin(format!("x_{}", j + 1))).collect();
    for i in 0..m {
        for j in 0..n {
            vars.push(bin(format!("y_{}_{}", i + 1, j + 1)));
        }
    }
    vars
}

fn linking_rows(l: &Layout) -> Vec<LinearRow> {
    let mut rows = Vec::with_capacity(l.m * l.n);
    for i in 0..l.m {
        for j in 0..l.n {
            rows.push(LinearRow {
                name: format!("link_{}_{}", i + 1, j + 1),
                kind: RowKind::Link,
                zone: i,
                terms: vec![(l.y(i, j), 1.0), (l.x(j), -1.0)],
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
    }
    rows
}

fn ddc_rows(inst: &Instance, l: &Layout) -> Vec<LinearRow> {
    let mut rows = Vec::new();
    for i in 0..l.m {
        for j in 0..l.n {
            for k in dominated_set(inst, i, j) {
                rows.push(LinearRow {
                    name: format!("ddc_{}_{}_{}", i + 1, j + 1, k + 1),
                    kind: RowKind::Ddc,
                    zone: i,
                    terms: vec![(l.y(i, j), 1.0), (l.y(i, k), 1.0)],
                    sense: Sense::Le,
                    rhs: 1.0,
                });
            }
        }
    }
    rows
}

fn adc_rows(inst: &Instance, l: &Layout) -> Vec<LinearRow> {
    let mut rows = Vec::new();
    for i in 0..l.m {
        for j in 0..l.n {
            let omega = dominated_set(inst, i, j);
            if omega.is_empty() {
                continue;
            }
            let size = omega.len() as f64;
            let mut terms: Vec<(usize, f64)> = omega.iter().map(|&k| (l.y(i, k), 1.0)).collect();
            terms.push((l.y(i, j), size));
            rows.push(LinearRow {
                name: format!("adc_{}_{}", i + 1, j + 1),
                kind: RowKind::Adc,
                zone: i,
                terms,
                sense: Sense::Le,
                rhs: size,
            });
        }
    }
    rows
}

fn path_rows(inst: &Instance, l: &Layout, extra: usize) -> Result<Vec<LinearRow>> {
    let mut rows = Vec::new();
    for i in 0..l.m {
        let graph = DominanceGraph::build(inst, i);
        for (r, path) in graph.longest_paths(extra)?.into_iter().enumerate() {
            if path.len() < 2 {
                continue;
            }
            let name = if r == 0 {
                format!("path_{}", i + 1)
            } else {
                format!("path_{}_{}", i + 1, r + 1)
            };
            rows.push(LinearRow {
                name,
                kind: RowKind::Path,
                zone: i,
                terms: path.vertices.iter().map(|&j| (l.y(i, j), 1.0)).collect(),
                sense: Sense::Le,
                rhs: 1.0,
            });
        }
    }
    Ok(rows)
}

fn dominance_rows(
    inst: &Instance,
    l: &Layout,
    block: DominanceBlock,
    opts: &ModelOptions,
) -> Result<Vec<LinearRow>> {
    Ok(match block {
        DominanceBlock::Ddc => {
            let mut rows = ddc_rows(inst, l);
            if opts.paths_with_ddc {
                rows.extend(path_rows(inst, l, opts.extra_paths)?);
            }
            rows
        }
        DominanceBlock::AdcPath => {
            let mut rows = adc_rows(inst, l);
            rows.extend(path_rows(inst, l, opts.extra_paths)?);
            rows
        }
    })
}

fn integer_formulation(
    inst: &Instance,
    costs: &Costs,
    kind: FormulationKind,
    block: DominanceBlock,
    opts: &ModelOptions,
) -> Result<Formulation> {
    costs.check(inst)?;
    let l = Layout { m: inst.m(), n: inst.n() };
    let mut rows = linking_rows(&l);
    rows.extend(dominance_rows(inst, &l, block, opts)?);
    let fractional = (0..l.m)
        .map(|i| FractionalTerm {
            zone: i,
            demand: inst.demand(i),
            outside: inst.outside(i),
            terms: (0..l.n).map(|j| (l.y(i, j), inst.attraction(i, j))).collect(),
        })
        .collect();
    Ok(Formulation {
        kind,
        dominance: block,
        zones: l.m,
        lockers: l.n,
        variables: base_variables(l.m, l.n),
        objective: Objective {
            sense: ObjectiveSense::Maximize,
            constant: 0.0,
            linear: (0..l.n).map(|j| (l.x(j), -costs.get(j))).collect(),
            fractional,
        },
        rows,
        cones: Vec::new(),
    })
}

/// Linking rows plus one pairwise row per dominance pair.
pub fn build_ip_d(inst: &Instance, costs: &Costs, opts: &ModelOptions) -> Result<Formulation> {
    integer_formulation(inst, costs, FormulationKind::IpD, DominanceBlock::Ddc, opts)
}

/// Linking rows, aggregated dominance rows and longest-path rows.
pub fn build_ip_a(inst: &Instance, costs: &Costs, opts: &ModelOptions) -> Result<Formulation> {
    integer_formulation(inst, costs, FormulationKind::IpA, DominanceBlock::AdcPath, opts)
}

/// Conic reformulation minimizing lost demand plus facility cost.
pub fn build_micqp(
    inst: &Instance,
    costs: &Costs,
    block: DominanceBlock,
    opts: &ModelOptions,
) -> Result<Formulation> {
    costs.check(inst)?;
    let (m, n) = (inst.m(), inst.n());
    let l = Layout { m, n };
    let mut variables = base_variables(m, n);
    for i in 0..m {
        variables.push(Variable {
            name: format!("b_{}", i + 1),
            var_type: VarType::Continuous,
            lower: 0.0,
            upper: Some(1.0),
        });
    }
    for i in 0..m {
        variables.push(Variable {
            name: format!("z_{}", i + 1),
            var_type: VarType::Continuous,
            lower: 1.0,
            upper: None,
        });
    }
    let mut rows = linking_rows(&l);
    for i in 0..m {
        let a0 = inst.outside(i);
        let mut terms = vec![(l.z(i), 1.0)];
        terms.extend((0..n).map(|j| (l.y(i, j), -inst.attraction(i, j) / a0)));
        rows.push(LinearRow {
            name: format!("zdef_{}", i + 1),
            kind: RowKind::ZDef,
            zone: i,
            terms,
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }
    rows.extend(dominance_rows(inst, &l, block, opts)?);
    let cones = (0..m)
        .map(|i| ConeRow {
            name: format!("cone_{}", i + 1),
            zone: i,
            b: l.b(i),
            z: l.z(i),
        })
        .collect();
    let mut linear: Vec<(usize, f64)> = (0..m).map(|i| (l.b(i), inst.demand(i))).collect();
    linear.extend((0..n).map(|j| (l.x(j), costs.get(j))));
    Ok(Formulation {
        kind: FormulationKind::Micqp,
        dominance: block,
        zones: m,
        lockers: n,
        variables,
        objective: Objective {
            sense: ObjectiveSense::Minimize,
            constant: 0.0,
            linear,
            fractional: Vec::new(),
        },
        rows,
        cones,
    })
}

impl Formulation {
    fn layout(&self) -> Layout {
        Layout {
            m: self.zones,
            n: self.lockers,
        }
    }

    pub fn x_index(&self, j: usize) -> usize {
        self.layout().x(j)
    }

    pub fn y_index(&self, i: usize, j: usize) -> usize {
        self.layout().y(i, j)
    }

    pub fn rows_of(&self, kind: RowKind) -> impl Iterator<Item = &LinearRow> {
        self.rows.iter().filter(move |r| r.kind == kind)
    }

    /// `pi_ij = a_ij / a_i0` as stored in the `zdef` rows (MICQP only).
    pub fn scaled_attraction(&self, zone: usize) -> Option<Vec<f64>> {
        let l = self.layout();
        let row = self.rows.iter().find(|r| r.kind == RowKind::ZDef && r.zone == zone)?;
        let mut pi = vec![0.0; self.lockers];
        for &(v, c) in &row.terms {
            if v != l.z(zone) {
                pi[v - l.y(zone, 0)] = -c;
            }
        }
        Some(pi)
    }

    /// Full variable vector for an integer point. For MICQP, `z_i` follows
    /// its defining row and `b_i = 1 / z_i`.
    pub fn assignment(&self, location: &LocationDecision, restriction: &RestrictionDecision) -> Vec<f64> {
        let l = self.layout();
        let mut values = vec![0.0; self.variables.len()];
        for (j, &o) in location.open.iter().enumerate() {
            values[l.x(j)] = f64::from(u8::from(o));
        }
        for (i, row) in restriction.allowed.iter().enumerate() {
            for (j, &y) in row.iter().enumerate() {
                values[l.y(i, j)] = f64::from(u8::from(y));
            }
        }
        if self.kind == FormulationKind::Micqp {
            for i in 0..self.zones {
                let z = self
                    .rows
                    .iter()
                    .find(|r| r.kind == RowKind::ZDef && r.zone == i)
                    .map(|r| {
                        r.rhs
                            - r.terms
                                .iter()
                                .filter(|&&(v, _)| v != l.z(i))
                                .map(|&(v, c)| c * values[v])
                                .sum::<f64>()
                    })
                    .unwrap_or(1.0);
                values[l.z(i)] = z;
                values[l.b(i)] = 1.0 / z;
            }
        }
        values
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        let obj = &self.objective;
        let linear: f64 = obj.linear.iter().map(|&(v, c)| c * values[v]).sum();
        let fractional: f64 = obj
            .fractional
            .iter()
            .map(|t| {
                let a: f64 = t.terms.iter().map(|&(v, c)| c * values[v]).sum();
                t.demand * a / (a + t.outside)
            })
            .sum();
        obj.constant + linear + fractional
    }

    /// Names of all violated rows, bounds, integrality conditions and cones.
    pub fn violations(&self, values: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (v, var) in self.variables.iter().enumerate() {
            let val = values[v];
            if val < var.lower - tol || var.upper.is_some_and(|u| val > u + tol) {
                out.push(format!("bound {}", var.name));
            }
            if var.var_type == VarType::Binary && (val - val.round()).abs() > tol {
                out.push(format!("integrality {}", var.name));
            }
        }
        out.extend(self.rows.iter().filter(|r| !r.is_satisfied(values, tol)).map(|r| r.name.clone()));
        for c in &self.cones {
            let (b, z) = (values[c.b], values[c.z]);
            if b < -tol || z < -tol || b * z < 1.0 - tol {
                out.push(c.name.clone());
            }
        }
        out
    }

    pub fn export(&self, format: ExportFormat) -> Result<Export> {
        match format {
            ExportFormat::LpText => Ok(self.to_lp()),
            ExportFormat::ConicText => Ok(Export {
                text: self.to_conic(),
                warnings: Vec::new(),
            }),
            ExportFormat::Json => Ok(Export {
                text: jsonfmt::to_string(self)
                    .map_err(|e| Error::Internal(format!("formulation serialization: {e}")))?,
                warnings: Vec::new(),
            }),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("formulation JSON (line {}, column {})", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    fn name(&self, v: usize) -> &str {
        &self.variables[v].name
    }

    fn lp_terms(&self, terms: &[(usize, f64)]) -> String {
        let mut s = String::new();
        for (idx, &(v, c)) in terms.iter().enumerate() {
            let sign = if c < 0.0 { "-" } else { "+" };
            let mag = c.abs();
            let coef = if mag == 1.0 { String::new() } else { format!("{mag} ") };
            if idx == 0 {
                let lead = if c < 0.0 { "- " } else { "" };
                let _ = write!(s, "{lead}{coef}{}", self.name(v));
            } else {
                let _ = write!(s, " {sign} {coef}{}", self.name(v));
            }
        }
        s
    }

    fn to_lp(&self) -> Export {
        let mut s = String::new();
        let mut warnings = Vec::new();
        let _ = writeln!(s, "\\ locker-opt LP_TEXT v1");
        let _ = writeln!(s, "\\ formulation {} ({})", self.kind.label(), self.dominance.label());
        if !self.objective.fractional.is_empty() {
            let _ = writeln!(
                s,
                "\\ objective adds sum_i d_i * A_i / (A_i + a_i0), not representable as LP text:"
            );
            for t in &self.objective.fractional {
                let _ = writeln!(
                    s,
                    "\\   zone {}: d = {}, a0 = {}, A = {}",
                    t.zone + 1,
                    t.demand,
                    t.outside,
                    self.lp_terms(&t.terms)
                );
            }
            warnings.push("fractional revenue term written as comments only".to_string());
        }
        let sense = match self.objective.sense {
            ObjectiveSense::Maximize => "Maximize",
            ObjectiveSense::Minimize => "Minimize",
        };
        let _ = writeln!(s, "{sense}");
        let _ = writeln!(s, " obj: {}", self.lp_terms(&self.objective.linear));
        let _ = writeln!(s, "Subject To");
        for r in &self.rows {
            let _ = writeln!(s, " {}: {} {} {}", r.name, self.lp_terms(&r.terms), r.sense.lp(), r.rhs);
        }
        if !self.cones.is_empty() {
            let _ = writeln!(s, "\\ rotated cones b_i * z_i >= 1 (not emitted as rows):");
            for c in &self.cones {
                let _ = writeln!(s, "\\ {}: [ {} * {} ] >= 1", c.name, self.name(c.b), self.name(c.z));
            }
            warnings.push(format!(
                "{} conic rows emitted as comments; use CONIC_TEXT or JSON for a complete model",
                self.cones.len()
            ));
        }
        let continuous: Vec<&Variable> = self
            .variables
            .iter()
            .filter(|v| v.var_type == VarType::Continuous)
            .collect();
        if !continuous.is_empty() {
            let _ = writeln!(s, "Bounds");
            for v in continuous {
                match v.upper {
                    Some(u) => {
                        let _ = writeln!(s, " {} <= {} <= {}", v.lower, v.name, u);
                    }
                    None => {
                        let _ = writeln!(s, " {} >= {}", v.name, v.lower);
                    }
                }
            }
        }
        let _ = writeln!(s, "Binaries");
        let binaries: Vec<&str> = self
            .variables
            .iter()
            .filter(|v| v.var_type == VarType::Binary)
            .map(|v| v.name.as_str())
            .collect();
        for chunk in binaries.chunks(10) {
            let _ = writeln!(s, " {}", chunk.join(" "));
        }
        let _ = writeln!(s, "End");
        Export { text: s, warnings }
    }

    fn conic_terms(&self, terms: &[(usize, f64)]) -> String {
        let mut s = terms.len().to_string();
        for &(v, c) in terms {
            let _ = write!(s, " {} {}", self.name(v), c);
        }
        s
    }

    fn to_conic(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "CONIC_TEXT v1");
        let _ = writeln!(s, "kind {}", self.kind.label());
        let _ = writeln!(s, "dominance {}", self.dominance.label());
        let _ = writeln!(s, "variables {}", self.variables.len());
        for v in &self.variables {
            let ty = match v.var_type {
                VarType::Binary => "binary",
                VarType::Continuous => "continuous",
            };
            let upper = v.upper.map_or("inf".to_string(), |u| u.to_string());
            let _ = writeln!(s, "{} {} {} {}", v.name, ty, v.lower, upper);
        }
        let sense = match self.objective.sense {
            ObjectiveSense::Maximize => "maximize",
            ObjectiveSense::Minimize => "minimize",
        };
        let _ = writeln!(
            s,
            "objective {} {} {}",
            sense,
            self.objective.constant,
            self.objective.linear.len()
        );
        for &(v, c) in &self.objective.linear {
            let _ = writeln!(s, "{} {}", self.name(v), c);
        }
        let _ = writeln!(s, "fractional {}", self.objective.fractional.len());
        for t in &self.objective.fractional {
            let _ = writeln!(s, "{} {} {} {}", t.zone + 1, t.demand, t.outside, self.conic_terms(&t.terms));
        }
        let _ = writeln!(s, "rows {}", self.rows.len());
        for r in &self.rows {
            let _ = writeln!(s, "{} {} {} {}", r.name, r.sense.word(), r.rhs, self.conic_terms(&r.terms));
        }
        let _ = writeln!(s, "cones {}", self.cones.len());
        for c in &self.cones {
            let _ = writeln!(s, "{} {} {}", c.name, self.name(c.b), self.name(c.z));
        }
        let _ = writeln!(s, "end");
        s
    }
}
