//! Problem data: customer zones, candidate lockers, attraction values and the
//! dominance threshold, plus the synthetic generator and the JSON file format.
//!
//! # Instance file
//!
//! A single JSON object:
//!
//! | field        | type                     | meaning                                  |
//! |--------------|--------------------------|------------------------------------------|
//! | `m`          | integer                  | number of customer zones                 |
//! | `n`          | integer                  | number of candidate lockers              |
//! | `demand`     | array of `m` numbers     | zone demand, > 0                         |
//! | `cost`       | array of `n` numbers     | locker cost, >= 0                        |
//! | `attraction` | `m` arrays of `n` numbers| locker attraction per zone, > 0          |
//! | `outside`    | array of `m` numbers     | outside-option attraction, > 0           |
//! | `gamma`      | number or `"inf"`        | dominance threshold, >= 0                |
//! | `tolerance`  | number, optional         | relative tie tolerance for dominance     |
//! | `meta`       | object                   | provenance; `meta.generator` holds the   |
//! |              |                          | generator spec when the file was generated|
//!
//! Floats are written with 17 significant digits so a save/load cycle is lossless.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::jsonfmt;
use crate::rng::UniformStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: usize,
    pub demand: f64,
    pub position: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Locker {
    pub id: usize,
    pub cost: f64,
    pub position: Option<[f64; 2]>,
}

/// Parameters of the synthetic square-geometry generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub zone_count: usize,
    pub locker_count: usize,
    pub square_side: f64,
    pub demand_range: [f64; 2],
    pub alpha: f64,
    pub xi: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    /// 200 zones and 100 lockers on a 30 x 30 square.
    pub fn ds1(seed: u64) -> Self {
        Self {
            zone_count: 200,
            locker_count: 100,
            square_side: 30.0,
            demand_range: [1.0, 1000.0],
            alpha: 1.0,
            xi: 1.0,
            seed,
        }
    }

    /// 400 zones and 150 lockers on a 40 x 40 square.
    pub fn ds2(seed: u64) -> Self {
        Self {
            zone_count: 400,
            locker_count: 150,
            square_side: 40.0,
            ..Self::ds1(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.zone_count < 1 {
            return Err(Error::validation("zone_count", "must be at least 1"));
        }
        if self.locker_count < 1 {
            return Err(Error::validation("locker_count", "must be at least 1"));
        }
        if !(self.square_side > 0.0 && self.square_side.is_finite()) {
            return Err(Error::validation("square_side", "must be positive and finite"));
        }
        let [lo, hi] = self.demand_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::validation("demand_range", "need 0 < lo <= hi"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::validation("alpha", "must be nonnegative and finite"));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::validation("xi", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Provenance record carried along with an instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// `e^(-alpha * distance)`.
pub fn attraction_from_distance(distance: f64, alpha: f64) -> Result<f64> {
    if !(distance >= 0.0) {
        return Err(Error::Domain(format!("distance must be nonnegative, got {distance}")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("alpha must be nonnegative, got {alpha}")));
    }
    Ok((-alpha * distance).exp())
}

/// Outside-option attraction `xi * e^-1`.
pub fn outside_attraction(xi: f64) -> Result<f64> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::Domain(format!("xi must be positive, got {xi}")));
    }
    Ok(xi * (-1.0f64).exp())
}

fn euclidean(p: [f64; 2], q: [f64; 2]) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    (dx * dx + dy * dy).sqrt()
}

/// Immutable problem data. Attractions are stored row-major, one row per zone.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    zones: Vec<Zone>,
    lockers: Vec<Locker>,
    attraction: Vec<f64>,
    outside: Vec<f64>,
    gamma: f64,
    tolerance: f64,
    meta: Meta,
}

impl Instance {
    /// Builds an instance from raw arrays; `attraction` has one row per zone.
    pub fn new(
        demand: Vec<f64>,
        cost: Vec<f64>,
        attraction: Vec<Vec<f64>>,
        outside: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        let zones = demand
            .into_iter()
            .enumerate()
            .map(|(id, demand)| Zone {
                id,
                demand,
                position: None,
            })
            .collect();
        let lockers = cost
            .into_iter()
            .enumerate()
            .map(|(id, cost)| Locker {
                id,
                cost,
                position: None,
            })
            .collect();
        Self::from_parts(zones, lockers, attraction, outside, gamma, Meta::default())
    }

    pub fn from_parts(
        zones: Vec<Zone>,
        lockers: Vec<Locker>,
        attraction: Vec<Vec<f64>>,
        outside: Vec<f64>,
        gamma: f64,
        meta: Meta,
    ) -> Result<Self> {
        let m = zones.len();
        let n = lockers.len();
        if attraction.len() != m {
            return Err(Error::validation(
                "attraction",
                format!("expected {m} rows, found {}", attraction.len()),
            ));
        }
        let mut flat = Vec::with_capacity(m * n);
        for (i, row) in attraction.iter().enumerate() {
            if row.len() != n {
                return Err(Error::validation(
                    "attraction",
                    format!("row {i} has {} entries, expected {n}", row.len()),
                ));
            }
            flat.extend_from_slice(row);
        }
        let inst = Self {
            zones,
            lockers,
            attraction: flat,
            outside,
            gamma,
            tolerance: 0.0,
            meta,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        let (m, n) = (self.m(), self.n());
        if self.outside.len() != m {
            return Err(Error::validation(
                "outside",
                format!("expected {m} entries, found {}", self.outside.len()),
            ));
        }
        for (i, z) in self.zones.iter().enumerate() {
            if z.id != i {
                return Err(Error::validation("demand", format!("zone {i} carries id {}", z.id)));
            }
            if !(z.demand > 0.0 && z.demand.is_finite()) {
                return Err(Error::validation(
                    "demand",
                    format!("demand must be positive (zone {i}: {})", z.demand),
                ));
            }
        }
        for (j, l) in self.lockers.iter().enumerate() {
            if l.id != j {
                return Err(Error::validation("cost", format!("locker {j} carries id {}", l.id)));
            }
            if !(l.cost >= 0.0 && l.cost.is_finite()) {
                return Err(Error::validation(
                    "cost",
                    format!("cost must be nonnegative (locker {j}: {})", l.cost),
                ));
            }
        }
        for i in 0..m {
            for j in 0..n {
                let a = self.attraction[i * n + j];
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::validation(
                        "attraction",
                        format!("attraction must be positive (zone {i}, locker {j}: {a})"),
                    ));
                }
            }
            let a0 = self.outside[i];
            if !(a0 > 0.0 && a0.is_finite()) {
                return Err(Error::validation(
                    "outside",
                    format!("outside attraction must be positive (zone {i}: {a0})"),
                ));
            }
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::validation("gamma", format!("must be nonnegative, got {}", self.gamma)));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::validation("tolerance", "must be nonnegative and finite"));
        }
        Ok(())
    }

    /// Draws a synthetic instance: zone positions (x then y, zone by zone),
    /// then locker positions, then demands, all from one seeded stream.
    /// Locker costs are zero; costs are supplied at solve time.
    pub fn generate(spec: &GeneratorSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = UniformStream::new(spec.seed);
        let side = spec.square_side;
        let point = |rng: &mut UniformStream| {
            let x = rng.next_range(0.0, side);
            let y = rng.next_range(0.0, side);
            [x, y]
        };
        let zone_pos: Vec<[f64; 2]> = (0..spec.zone_count).map(|_| point(&mut rng)).collect();
        let locker_pos: Vec<[f64; 2]> = (0..spec.locker_count).map(|_| point(&mut rng)).collect();
        let [lo, hi] = spec.demand_range;
        let demand: Vec<f64> = (0..spec.zone_count).map(|_| rng.next_range(lo, hi)).collect();

        let zones = zone_pos
            .iter()
            .zip(&demand)
            .enumerate()
            .map(|(id, (&p, &d))| Zone {
                id,
                demand: d,
                position: Some(p),
            })
            .collect();
        let lockers = locker_pos
            .iter()
            .enumerate()
            .map(|(id, &p)| Locker {
                id,
                cost: 0.0,
                position: Some(p),
            })
            .collect();
        let attraction = zone_pos
            .iter()
            .map(|&zp| {
                locker_pos
                    .iter()
                    .map(|&lp| attraction_from_distance(euclidean(zp, lp), spec.alpha))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let outside = vec![outside_attraction(spec.xi)?; spec.zone_count];

        let mut meta = Meta {
            generator: Some(spec.clone()),
            extra: BTreeMap::new(),
        };
        meta.extra.insert("demand_kind".into(), Value::from("continuous uniform"));
        meta.extra.insert("distance".into(), Value::from("euclidean"));
        Self::from_parts(zones, lockers, attraction, outside, 0.0, meta)
    }

    pub fn m(&self) -> usize {
        self.zones.len()
    }

    pub fn n(&self) -> usize {
        self.lockers.len()
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn lockers(&self) -> &[Locker] {
        &self.lockers
    }

    pub fn demand(&self, zone: usize) -> f64 {
        self.zones[zone].demand
    }

    pub fn total_demand(&self) -> f64 {
        self.zones.iter().map(|z| z.demand).sum()
    }

    pub fn attraction(&self, zone: usize, locker: usize) -> f64 {
        self.attraction[zone * self.n() + locker]
    }

    /// Attractions of all lockers for one zone.
    pub fn row(&self, zone: usize) -> &[f64] {
        let n = self.n();
        &self.attraction[zone * n..(zone + 1) * n]
    }

    pub fn outside(&self, zone: usize) -> f64 {
        self.outside[zone]
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_mnl(&self) -> bool {
        self.gamma == f64::INFINITY
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    /// Ratio above which one attraction dominates another: `(1 + gamma)(1 + tolerance)`.
    pub fn dominance_factor(&self) -> f64 {
        (1.0 + self.gamma) * (1.0 + self.tolerance)
    }

    /// `true` when locker `j` dominates locker `k` for `zone`.
    pub fn dominates(&self, zone: usize, j: usize, k: usize) -> bool {
        self.attraction(zone, j) > self.dominance_factor() * self.attraction(zone, k)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let mut out = self.clone();
        out.gamma = gamma;
        out.validate()?;
        Ok(out)
    }

    /// Sets the relative tie tolerance used by every dominance test.
    pub fn with_tolerance(&self, tolerance: f64) -> Result<Self> {
        let mut out = self.clone();
        out.tolerance = tolerance;
        out.validate()?;
        Ok(out)
    }

    /// Replaces every outside-option attraction with `xi * e^-1`.
    pub fn with_xi(&self, xi: f64) -> Result<Self> {
        let a0 = outside_attraction(xi)?;
        let mut out = self.clone();
        out.outside.iter_mut().for_each(|v| *v = a0);
        if let Some(g) = out.meta.generator.as_mut() {
            g.xi = xi;
        }
        Ok(out)
    }

    /// Recomputes the attraction matrix from stored positions with a new
    /// distance sensitivity. Outside attractions are left untouched.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let mut out = self.clone();
        let n = self.n();
        for (i, z) in self.zones.iter().enumerate() {
            let zp = z
                .position
                .ok_or_else(|| Error::validation("position", format!("zone {i} has no position")))?;
            for (j, l) in self.lockers.iter().enumerate() {
                let lp = l.position.ok_or_else(|| {
                    Error::validation("position", format!("locker {j} has no position"))
                })?;
                out.attraction[i * n + j] = attraction_from_distance(euclidean(zp, lp), alpha)?;
            }
        }
        if let Some(g) = out.meta.generator.as_mut() {
            g.alpha = alpha;
        }
        Ok(out)
    }

    /// Stores `costs` as the per-locker costs carried in the file.
    pub fn with_costs(&self, costs: &Costs) -> Result<Self> {
        costs.check(self)?;
        let mut out = self.clone();
        for (l, &c) in out.lockers.iter_mut().zip(costs.as_slice()) {
            l.cost = c;
        }
        Ok(out)
    }

    pub fn with_meta_entry(&self, key: &str, value: Value) -> Self {
        let mut out = self.clone();
        out.meta.extra.insert(key.to_string(), value);
        out
    }

    pub fn has_geometry(&self) -> bool {
        self.zones.iter().all(|z| z.position.is_some())
            && self.lockers.iter().all(|l| l.position.is_some())
    }

    /// Restores zone and locker positions by replaying the generator recorded
    /// in `meta`. Fails if there is no generator record or if the replayed
    /// data disagrees with this instance.
    pub fn with_geometry_from_meta(&self) -> Result<Self> {
        if self.has_geometry() {
            return Ok(self.clone());
        }
        let regen = self.regenerate()?;
        if !self.same_data(&regen) {
            return Err(Error::validation(
                "meta.generator",
                "replaying the recorded generator does not reproduce this instance",
            ));
        }
        let mut out = self.clone();
        for (z, r) in out.zones.iter_mut().zip(&regen.zones) {
            z.position = r.position;
        }
        for (l, r) in out.lockers.iter_mut().zip(&regen.lockers) {
            l.position = r.position;
        }
        Ok(out)
    }

    /// Replays `meta.generator`.
    pub fn regenerate(&self) -> Result<Self> {
        let spec = self
            .meta
            .generator
            .as_ref()
            .ok_or_else(|| Error::validation("meta.generator", "instance carries no generator record"))?;
        Self::generate(spec)
    }

    /// Bitwise comparison of demands, attractions and outside attractions.
    pub fn same_data(&self, other: &Self) -> bool {
        self.m() == other.m()
            && self.n() == other.n()
            && self
                .zones
                .iter()
                .zip(&other.zones)
                .all(|(a, b)| a.demand.to_bits() == b.demand.to_bits())
            && self
                .attraction
                .iter()
                .zip(&other.attraction)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self
                .outside
                .iter()
                .zip(&other.outside)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            m: self.m(),
            n: self.n(),
            demand: self.zones.iter().map(|z| z.demand).collect(),
            cost: self.lockers.iter().map(|l| l.cost).collect(),
            attraction: (0..self.m()).map(|i| self.row(i).to_vec()).collect(),
            outside: self.outside.clone(),
            gamma: Gamma(self.gamma),
            tolerance: self.tolerance,
            meta: self.meta.clone(),
        };
        jsonfmt::to_string(&file).expect("instance fields are serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("instance file (line {}, column {})", e.line(), e.column()),
            message: e.to_string(),
        })?;
        if file.demand.len() != file.m {
            return Err(Error::validation(
                "demand",
                format!("expected m = {} entries, found {}", file.m, file.demand.len()),
            ));
        }
        if file.cost.len() != file.n {
            return Err(Error::validation(
                "cost",
                format!("expected n = {} entries, found {}", file.n, file.cost.len()),
            ));
        }
        let mut inst = Self::new(file.demand, file.cost, file.attraction, file.outside, file.gamma.0)?;
        inst.tolerance = file.tolerance;
        inst.meta = file.meta;
        inst.validate()?;
        Ok(inst)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { context, message } => Error::Parse {
                context: format!("{} ({context})", path.as_ref().display()),
                message,
            },
            other => other,
        })
    }
}

/// Per-locker facility costs used by evaluation and solving.
#[derive(Debug, Clone, PartialEq)]
pub struct Costs(Vec<f64>);

impl Costs {
    pub fn new(costs: Vec<f64>) -> Result<Self> {
        if let Some((j, c)) = costs.iter().enumerate().find(|(_, c)| !(**c >= 0.0 && c.is_finite())) {
            return Err(Error::validation("cost", format!("cost must be nonnegative (locker {j}: {c})")));
        }
        Ok(Self(costs))
    }

    /// Same cost `f` for every one of `n` lockers.
    pub fn uniform(n: usize, f: f64) -> Result<Self> {
        Self::new(vec![f; n])
    }

    pub fn from_instance(inst: &Instance) -> Self {
        Self(inst.lockers.iter().map(|l| l.cost).collect())
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0[j]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn check(&self, inst: &Instance) -> Result<()> {
        if self.len() != inst.n() {
            return Err(Error::Contract(format!(
                "cost vector has {} entries for {} lockers",
                self.len(),
                inst.n()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Gamma(f64);

impl Serialize for Gamma {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Gamma {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Gamma(v)),
            Repr::Text(t) if t == "inf" => Ok(Gamma(f64::INFINITY)),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "gamma must be a number or \"inf\", got {t:?}"
            ))),
        }
    }
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    m: usize,
    n: usize,
    demand: Vec<f64>,
    cost: Vec<f64>,
    attraction: Vec<Vec<f64>>,
    outside: Vec<f64>,
    gamma: Gamma,
    #[serde(default, skip_serializing_if = "is_zero")]
    tolerance: f64,
    #[serde(default)]
    meta: Meta,
}

/// Parses a threshold given on a command line or in a list: a number or `inf`.
pub fn parse_gamma(text: &str) -> Result<f64> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    let v: f64 = t
        .parse()
        .map_err(|_| Error::validation("gamma", format!("cannot parse {t:?}")))?;
    if !(v >= 0.0) {
        return Err(Error::validation("gamma", format!("must be nonnegative, got {v}")));
    }
    Ok(v)
}
