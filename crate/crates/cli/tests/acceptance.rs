//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! `ACCEPTANCE_DS1_TIME_LIMIT` shortens the large-instance run (seconds,
//! default 1800).

use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use locker_core::choice::{self, choice_probabilities, LocationDecision, RestrictionDecision};
use locker_core::domgraph::DominanceGraph;
use locker_core::model::{self, DominanceBlock, Formulation, LinearRow, ModelOptions, RowKind};
use locker_core::rng::UniformStream;
use locker_core::solver::{self, best_restriction, SolveConfig};
use locker_core::{Costs, Instance};
use serde_json::Value;

const GAMMAS: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 5.0, f64::INFINITY];

/// Writes straight to the process stdout so the line shows without `--nocapture`.
fn report(criterion: u32, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "[{}] criterion {criterion}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = out.flush();
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_locker-opt")
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(bin())
        .args(args)
        .env_remove("LOCKER_OPT_THREADS")
        .output()
        .expect("binary runs")
}

fn example(gamma: f64) -> Instance {
    Instance::new(
        vec![50.0, 50.0],
        vec![0.0; 3],
        vec![vec![2.0, 2.0, 3.1], vec![2.0, 2.0, 3.1]],
        vec![4.0, 4.0],
        gamma,
    )
    .unwrap()
}

fn random_instance(rng: &mut UniformStream, m: usize, n: usize, gamma: f64) -> Instance {
    let demand = (0..m).map(|_| rng.next_range(1.0, 100.0)).collect();
    let rows = (0..m)
        .map(|_| (0..n).map(|_| rng.next_range(0.05, 3.0)).collect())
        .collect();
    let outside = (0..m).map(|_| rng.next_range(0.2, 2.0)).collect();
    Instance::new(demand, vec![0.0; n], rows, outside, gamma).unwrap()
}

/// Zero, low and high uniform costs, relative to the average demand per locker.
fn cost_level(inst: &Instance, level: usize) -> Costs {
    let per_locker = inst.total_demand() / inst.n().max(1) as f64;
    Costs::uniform(inst.n(), [0.0, 0.05, 0.4][level] * per_locker).unwrap()
}

/// The instances shared by the exactness and conic-equivalence criteria.
fn oracle_instances() -> Vec<(Instance, Costs)> {
    let mut rng = UniformStream::new(20_240_601);
    (0..200)
        .map(|k| {
            let m = 1 + (rng.next_unit() * 15.0) as usize;
            let n = (rng.next_unit() * 13.0) as usize;
            let inst = random_instance(&mut rng, m, n, GAMMAS[k % GAMMAS.len()]);
            let costs = cost_level(&inst, (k / GAMMAS.len()) % 3);
            (inst, costs)
        })
        .collect()
}

fn exhaustive_best(inst: &Instance, zone: usize, available: &[usize]) -> f64 {
    let mut best = 0.0f64;
    for mask in 1u32..(1 << available.len()) {
        let mut set: Vec<usize> = (0..available.len())
            .filter(|&b| mask >> b & 1 == 1)
            .map(|b| available[b])
            .collect();
        let antichain = set
            .iter()
            .all(|&j| set.iter().all(|&k| !inst.dominates(zone, j, k)));
        if antichain {
            set.sort_unstable();
            best = best.max(set.iter().map(|&j| inst.attraction(zone, j)).sum());
        }
    }
    best
}

#[test]
fn criterion_1_worked_example() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut check = |name: &str, got: f64, published: f64| {
        if (got - published).abs() > 5e-4 {
            failures.push(format!("{name} = {got:.6} vs {published}"));
        }
    };

    let two = example(0.5);
    let pair = RestrictionDecision::from_sets(3, &[vec![0, 1], vec![0, 1]]);
    let costs = Costs::uniform(3, 0.0).unwrap();
    let r_pair = choice::profit(&two, &LocationDecision::from_set(3, &[0, 1]), &pair, &costs).unwrap();
    check("R_s = R_t", r_pair.revenue, 50.0);

    let all = LocationDecision::all_open(3);
    let mnl = example(f64::INFINITY);
    let p = choice_probabilities(&mnl, &choice::unrestricted(&mnl, &all)).unwrap();
    check("MNL p_11", p.locker[0][0], 0.18);
    check("MNL p_12", p.locker[0][1], 0.18);
    check("MNL p_13", p.locker[0][2], 0.279);
    check("MNL p_10", p.outside[0], 0.361);
    let r_s = choice::profit(&mnl, &all, &choice::unrestricted(&mnl, &all), &costs).unwrap();
    check("R_s*", r_s.revenue, 63.9);

    let y = choice::unrestricted(&two, &all);
    let p = choice_probabilities(&two, &y).unwrap();
    check("TLM p_11", p.locker[0][0], 0.0);
    check("TLM p_12", p.locker[0][1], 0.0);
    check("TLM p_13", p.locker[0][2], 0.437);
    check("TLM p_10", p.outside[0], 0.563);
    let r_t = choice::profit(&two, &all, &y, &costs).unwrap();
    check("R_t*", r_t.revenue, 43.7);

    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= 1.0 {
        failures.push(format!("runtime {elapsed:.3} s"));
    }
    let pass = failures.is_empty();
    report(
        1,
        pass,
        &if pass {
            "worked example probabilities and revenues within 5e-4".to_string()
        } else {
            format!("worked example mismatches: {}", failures.join("; "))
        },
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn criterion_2_bb_matches_enumeration() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for (inst, costs) in oracle_instances() {
        let bb = solver::solve_bb(&inst, &costs, &SolveConfig::exact()).unwrap();
        let brute = solver::solve_bruteforce(&inst, &costs).unwrap();
        worst = worst.max((bb.profit - brute.profit).abs());
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = worst <= 1e-9 && elapsed < 300.0;
    report(
        2,
        pass,
        &format!("200 instances, largest |bb - brute force| = {worst:.3e}, {elapsed:.1} s"),
    );
    assert!(pass);
}

#[test]
fn criterion_3_window_oracle() {
    let started = Instant::now();
    let mut rng = UniformStream::new(3);
    let mut mismatches = 0;
    for case in 0..500 {
        let n = 1 + case % 14;
        let inst = random_instance(&mut rng, 1, n, [0.0, 0.1, 0.5, 1.0, 2.0, 5.0][case % 6]);
        let available: Vec<usize> = (0..n).filter(|_| rng.next_unit() < 0.8).collect();
        let (set, sum) = best_restriction(&inst, 0, &available);
        if sum != exhaustive_best(&inst, 0, &available) || !choice::is_antichain(&inst, 0, &set) {
            mismatches += 1;
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = mismatches == 0 && elapsed < 60.0;
    report(3, pass, &format!("500 cases, {mismatches} mismatches, {elapsed:.1} s"));
    assert!(pass);
}

fn dfs_longest(g: &DominanceGraph) -> usize {
    fn walk(g: &DominanceGraph, v: usize) -> usize {
        1 + g.successors(v).iter().map(|&w| walk(g, w)).max().unwrap_or(0)
    }
    (0..g.vertex_count()).map(|v| walk(g, v)).max().unwrap_or(0)
}

#[test]
fn criterion_4_longest_path() {
    let started = Instant::now();
    let mut rng = UniformStream::new(4);
    let mut bad = 0;
    for case in 0..200 {
        let n = 1 + case % 12;
        let inst = random_instance(&mut rng, 1, n, [0.0, 0.2, 0.5, 1.0, 3.0][case % 5]);
        let g = DominanceGraph::build(&inst, 0);
        let path = g.longest_path().unwrap();
        let t = path.len();
        let pairs = path
            .vertices
            .iter()
            .enumerate()
            .map(|(a, &u)| path.vertices[a + 1..].iter().filter(|&&v| g.has_edge(u, v)).count())
            .sum::<usize>();
        let ok = t == dfs_longest(&g)
            && g.is_path(&path.vertices)
            && g.is_maximal_path(&path.vertices)
            && pairs == t * (t - 1) / 2;
        if !ok {
            bad += 1;
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = bad == 0 && elapsed < 60.0;
    report(4, pass, &format!("200 dominance graphs, {bad} failures, {elapsed:.1} s"));
    assert!(pass);
}

fn zone_rows(f: &Formulation, kind: RowKind) -> Vec<&LinearRow> {
    f.rows_of(kind).filter(|r| r.zone == 0).collect()
}

fn y_point(f: &Formulation, y: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; f.variables.len()];
    for (j, &yj) in y.iter().enumerate() {
        v[f.x_index(j)] = 1.0;
        v[f.y_index(0, j)] = yj;
    }
    v
}

#[test]
fn criterion_5_pairwise_rows_imply_aggregated_rows() {
    let started = Instant::now();
    let mut rng = UniformStream::new(5);
    let mut violations = 0;
    for case in 0..10_000 {
        let n = 2 + case % 9;
        let inst = random_instance(&mut rng, 1, n, [0.0, 0.3, 1.0, 2.0][case % 4]);
        let costs = Costs::uniform(n, 0.0).unwrap();
        let ipd = model::build_ip_d(&inst, &costs, &ModelOptions::default()).unwrap();
        let ipa = model::build_ip_a(&inst, &costs, &ModelOptions::default()).unwrap();
        let mut y: Vec<f64> = (0..n).map(|_| rng.next_unit()).collect();
        for j in 0..n {
            for k in 0..n {
                if inst.dominates(0, j, k) {
                    y[k] = y[k].min(1.0 - y[j]);
                }
            }
        }
        let v = y_point(&ipd, &y);
        assert!(zone_rows(&ipd, RowKind::Ddc).iter().all(|r| r.is_satisfied(&v, 1e-12)));
        if !zone_rows(&ipa, RowKind::Adc).iter().all(|r| r.is_satisfied(&v, 1e-12)) {
            violations += 1;
        }
    }

    let chain = Instance::new(vec![1.0], vec![0.0; 3], vec![vec![9.0, 2.0, 0.4]], vec![1.0], 1.0).unwrap();
    let costs = Costs::uniform(3, 0.0).unwrap();
    let ipd = model::build_ip_d(&chain, &costs, &ModelOptions::default()).unwrap();
    let ipa = model::build_ip_a(&chain, &costs, &ModelOptions::default()).unwrap();
    let v = y_point(&ipd, &[0.625, 0.625, 0.125]);
    let strict = zone_rows(&ipa, RowKind::Adc).iter().all(|r| r.is_satisfied(&v, 0.0))
        && zone_rows(&ipd, RowKind::Ddc).iter().any(|r| !r.is_satisfied(&v, 0.0));

    let elapsed = started.elapsed().as_secs_f64();
    let pass = violations == 0 && strict && elapsed < 30.0;
    report(
        5,
        pass,
        &format!("10000 points, {violations} aggregated-row violations, strict witness {strict}, {elapsed:.1} s"),
    );
    assert!(pass);
}

/// Minimum of lost demand plus facility cost over integer points of the
/// conic model, enumerating location vectors and, per zone, the restriction
/// rows admitted by the model's own dominance rows.
fn conic_minimum(inst: &Instance, costs: &Costs, f: &Formulation) -> f64 {
    let (m, n) = (inst.m(), inst.n());
    let best: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let rows: Vec<&LinearRow> = f
                .rows
                .iter()
                .filter(|r| r.zone == i && matches!(r.kind, RowKind::Ddc | RowKind::Adc | RowKind::Path))
                .collect();
            let mut best = vec![f64::NEG_INFINITY; 1 << n];
            let mut v = vec![0.0; f.variables.len()];
            for s in 0..1usize << n {
                for j in 0..n {
                    v[f.y_index(i, j)] = f64::from(s >> j & 1 == 1);
                }
                if rows.iter().all(|r| r.is_satisfied(&v, 1e-12)) {
                    best[s] = (0..n).filter(|&j| s >> j & 1 == 1).map(|j| inst.attraction(i, j)).sum();
                }
                for j in 0..n {
                    if s >> j & 1 == 1 {
                        best[s] = best[s].max(best[s ^ (1 << j)]);
                    }
                }
            }
            best
        })
        .collect();
    (0..1usize << n)
        .map(|x| {
            let lost: f64 = (0..m)
                .map(|i| inst.demand(i) / (1.0 + best[i][x] / inst.outside(i)))
                .sum();
            lost + (0..n).filter(|&j| x >> j & 1 == 1).map(|j| costs.get(j)).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_6_conic_equivalence() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for (inst, costs) in oracle_instances() {
        let profit = solver::solve_bruteforce(&inst, &costs).unwrap().profit;
        for block in [DominanceBlock::Ddc, DominanceBlock::AdcPath] {
            let f = model::build_micqp(&inst, &costs, block, &ModelOptions::default()).unwrap();
            let value = inst.total_demand() - conic_minimum(&inst, &costs, &f);
            worst = worst.max((value - profit).abs());
        }
    }
    let pass = worst <= 1e-6;
    report(
        6,
        pass,
        &format!(
            "200 instances, largest |total demand - conic minimum - optimum| = {worst:.3e}, {:.1} s",
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

fn read_csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

fn column(rows: &[std::collections::HashMap<String, String>], name: &str) -> Vec<f64> {
    rows.iter().map(|r| r[name].parse().unwrap()).collect()
}

#[test]
fn criterion_7_trends_on_a_small_analogue() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let inst_path = dir.path().join("small.json");
    let inst_arg = inst_path.to_str().unwrap();
    let out = run(&[
        "gen", "--zones", "40", "--lockers", "20", "--side", "13.4", "--seed", "42", "--gamma", "2", "--out", inst_arg,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let sweep = |vary: &str, values: &str, name: &str| {
        let csv = dir.path().join(name);
        let out = run(&[
            "sweep", "--instance", inst_arg, "--vary", vary, "--values", values, "--cost", "500", "--gap", "1e-9",
            "--out", csv.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        read_csv(&csv)
    };
    let mut problems = Vec::new();
    let nondecreasing = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
    let nonincreasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));

    let g = sweep("gamma", "0,1,2,3,5,inf", "gamma.csv");
    let (profit, count) = (column(&g, "profit"), column(&g, "facility_count"));
    if !nondecreasing(&profit) {
        problems.push(format!("gamma profit {profit:?}"));
    }
    if !nondecreasing(&count) {
        problems.push(format!("gamma #F {count:?}"));
    }
    let loss = column(&g, "rel_loss_pct");
    if loss.iter().any(|&l| l < -1e-9) || *loss.last().unwrap() != 0.0 {
        problems.push(format!("gamma RelLoss {loss:?}"));
    }

    let x = sweep("xi", "0.05,0.1,0.3,0.5,0.7,1.0,1.3,1.5", "xi.csv");
    let profit = column(&x, "profit");
    if !nonincreasing(&profit) {
        problems.push(format!("xi profit {profit:?}"));
    }
    let a = sweep("alpha", "0.5,0.8,1.0,1.5,2.0", "alpha.csv");
    let profit = column(&a, "profit");
    if !nonincreasing(&profit) {
        problems.push(format!("alpha profit {profit:?}"));
    }
    for rows in [&x, &a] {
        let loss = column(rows, "rel_loss_pct");
        if loss.iter().any(|&l| l < -1e-9) {
            problems.push(format!("RelLoss {loss:?}"));
        }
    }
    if g.iter().chain(&x).chain(&a).any(|r| r["status"] != "OPTIMAL") {
        problems.push("a sweep point did not solve to optimality".into());
    }

    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= 600.0 {
        problems.push(format!("runtime {elapsed:.0} s"));
    }
    let pass = problems.is_empty();
    report(
        7,
        pass,
        &if pass {
            format!("gamma, xi and alpha sweep trends hold on m=40, n=20 ({elapsed:.1} s)")
        } else {
            format!("trend violations: {}", problems.join("; "))
        },
    );
    assert!(pass, "{problems:?}");
}

#[test]
fn criterion_8_full_scale_instance() {
    let limit = std::env::var("ACCEPTANCE_DS1_TIME_LIMIT").unwrap_or_else(|_| "1800".into());
    let dir = tempfile::tempdir().unwrap();
    let inst_path = dir.path().join("ds1.json");
    let result_path = dir.path().join("ds1_result.json");
    let out = run(&[
        "gen", "--zones", "200", "--lockers", "100", "--side", "30", "--alpha", "1", "--xi", "1", "--seed", "42",
        "--out", inst_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "solve", "--instance", inst_path.to_str().unwrap(), "--gamma", "2", "--cost", "500", "--method", "bb",
        "--gap", "0.01", "--time-limit", &limit, "--seed-check", "--out", result_path.to_str().unwrap(),
    ]);
    let code = out.status.code();
    let mut problems = Vec::new();
    if !matches!(code, Some(0) | Some(1)) {
        problems.push(format!("exit code {code:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }

    let result: Value = serde_json::from_str(&std::fs::read_to_string(&result_path).unwrap()).unwrap();
    let inst = Instance::load(&inst_path).unwrap().with_gamma(2.0).unwrap();
    let costs = Costs::uniform(inst.n(), 500.0).unwrap();
    let x: Vec<bool> = result["x"].as_array().unwrap().iter().map(|v| v.as_u64() == Some(1)).collect();
    let y: Vec<Vec<bool>> = result["y"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row.as_array().unwrap().iter().map(|v| v.as_u64() == Some(1)).collect())
        .collect();
    let location = LocationDecision { open: x };
    let restriction = RestrictionDecision { allowed: y };
    let profit = result["profit"].as_f64().unwrap();
    let bound = result["upper_bound"].as_f64().unwrap();
    let gap = result["gap"].as_f64().unwrap();
    let status = result["status"].as_str().unwrap().to_string();

    match choice::profit(&inst, &location, &restriction, &costs) {
        Ok(audit) if (audit.profit - profit).abs() <= 1e-9 * profit.abs().max(1.0) => {}
        Ok(audit) => problems.push(format!("reported profit {profit} but x, y give {}", audit.profit)),
        Err(e) => problems.push(format!("emitted x, y infeasible: {e}")),
    }
    if !(bound >= profit - 1e-9) {
        problems.push(format!("bound {bound} below profit {profit}"));
    }
    let expected_gap = if bound == profit { 0.0 } else { (bound - profit).abs() / bound.abs() };
    if (gap - expected_gap).abs() > 1e-12 {
        problems.push(format!("gap {gap} but |bound - profit| / |bound| = {expected_gap}"));
    }
    let greedy = solver::greedy_local_search(&inst, &costs).unwrap();
    let greedy_profit = solver::evaluate_location(&inst, &costs, &greedy).unwrap().profit;
    if bound < greedy_profit - 1e-9 {
        problems.push(format!("bound {bound} below a feasible profit {greedy_profit}"));
    }
    let root = solver::node_bound(&inst, &costs, &solver::NodeState::root(inst.n()));
    if bound > root + 1e-9 * root.abs() {
        problems.push(format!("bound {bound} above the root window bound {root}"));
    }
    if (status == "OPTIMAL" || status == "GAP_LIMIT") && gap > 0.01 + 1e-12 {
        problems.push(format!("status {status} with gap {gap}"));
    }

    let pass = problems.is_empty();
    report(
        8,
        pass,
        &if pass {
            format!(
                "m=200 n=100: status {status}, profit {profit:.2}, bound {bound:.2}, gap {:.2}% (limit {limit} s); audit consistent",
                gap * 100.0
            )
        } else {
            format!("large instance audit failed: {}", problems.join("; "))
        },
    );
    assert!(pass, "{problems:?}");
}

#[test]
fn criterion_9_export_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = dir.path().join("example.json");
    example(0.5).save(&inst_path).unwrap();
    let lp = dir.path().join("example.lp");
    let js = dir.path().join("example.json.model");
    let mut problems = Vec::new();
    for (format, path) in [("lp", &lp), ("json", &js)] {
        let out = run(&[
            "export", "--instance", inst_path.to_str().unwrap(), "--cost", "0", "--form", "ipd", "--format", format,
            "--out", path.to_str().unwrap(),
        ]);
        if !out.status.success() {
            problems.push(format!("export {format} failed: {}", String::from_utf8_lossy(&out.stderr)));
        }
    }

    let text = std::fs::read_to_string(&lp).unwrap_or_default();
    let link = text.lines().filter(|l| l.trim_start().starts_with("link_")).count();
    let ddc = text.lines().filter(|l| l.trim_start().starts_with("ddc_")).count();
    let constraints = text.lines().filter(|l| l.starts_with(' ') && l.contains(':') && !l.contains("obj:")).count();
    let binaries: Vec<&str> = text
        .split("Binaries")
        .nth(1)
        .unwrap_or("")
        .split("End")
        .next()
        .unwrap_or("")
        .split_whitespace()
        .collect();
    let expected_binaries = ["x_1", "x_2", "x_3", "y_1_1", "y_1_2", "y_1_3", "y_2_1", "y_2_2", "y_2_3"];
    if link != 6 || ddc != 4 || constraints != 10 {
        problems.push(format!("{link} linking rows, {ddc} pairwise rows, {constraints} rows in total"));
    }
    if binaries != expected_binaries {
        problems.push(format!("binaries {binaries:?}"));
    }

    let json_text = std::fs::read_to_string(&js).unwrap_or_default();
    match Formulation::from_json(&json_text) {
        Ok(f) => {
            let built = model::build_ip_d(&example(0.5), &Costs::uniform(3, 0.0).unwrap(), &ModelOptions::default()).unwrap();
            if f != built {
                problems.push("parsed JSON differs from the built formulation".into());
            }
            let again = f.export(model::ExportFormat::Json).unwrap().text;
            if again != json_text {
                problems.push("re-exported JSON differs byte-wise".into());
            }
        }
        Err(e) => problems.push(format!("JSON does not parse: {e}")),
    }

    let pass = problems.is_empty();
    report(
        9,
        pass,
        &if pass {
            "LP text has 6 linking rows, 4 pairwise rows and 9 binaries; JSON round-trips".to_string()
        } else {
            format!("export problems: {}", problems.join("; "))
        },
    );
    assert!(pass, "{problems:?}");
}
