//! `locker-opt`: generate instances, solve them, export formulations and run sweeps.
//!
//! Exit codes: 0 success, 1 solver stopped at a time or node limit (output
//! still written), 2 usage error, 3 invalid data.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use locker_core::domgraph::DominanceGraph;
use locker_core::eval::{self, SweepOptions, SweepParam};
use locker_core::instance::parse_gamma;
use locker_core::model::{self, DominanceBlock, ExportFormat, ModelOptions};
use locker_core::solver::{self, BranchingRule, Heuristic, Method, SolveConfig, SolveResult};
use locker_core::{jsonfmt, Costs, Error, GeneratorSpec, Instance};
use serde::Serialize;
use serde_json::{json, Value};

use manifest::{sha256_hex, RunManifest};

#[derive(Parser)]
#[command(name = "locker-opt", version, about = "Parcel locker location under the threshold Luce model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance on a square.
    Gen(GenArgs),
    /// Solve an instance and write the result as JSON.
    Solve(SolveArgs),
    /// Write a formulation or dominance graphs to a model file.
    Export(ExportArgs),
    /// Solve one instance per parameter value and write a CSV table.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 200)]
    zones: usize,
    #[arg(long, default_value_t = 100)]
    lockers: usize,
    #[arg(long, default_value_t = 30.0)]
    side: f64,
    #[arg(long, default_value_t = 1.0)]
    demand_lo: f64,
    #[arg(long, default_value_t = 1000.0)]
    demand_hi: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Threshold stored in the file ("inf" for MNL).
    #[arg(long, default_value = "0", value_parser = gamma_arg)]
    gamma: f64,
    /// Uniform facility cost stored in the file.
    #[arg(long, default_value_t = 0.0)]
    cost: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Bb)]
    method: MethodArg,
    /// Relative optimality gap tolerance.
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long, env = "LOCKER_OPT_THREADS", default_value_t = 1)]
    threads: usize,
    #[arg(long, value_enum, default_value_t = BranchingArg::MaxWeight)]
    branching: BranchingArg,
    #[arg(long, value_enum, default_value_t = HeuristicArg::Greedy)]
    heuristic: HeuristicArg,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Overrides the threshold stored in the instance ("inf" for MNL).
    #[arg(long, value_parser = gamma_arg)]
    gamma: Option<f64>,
    /// Uniform facility cost; defaults to the costs stored in the instance.
    #[arg(long)]
    cost: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Regenerate the instance from its recorded generator and require identical data.
    #[arg(long)]
    seed_check: bool,
    /// Result JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_parser = gamma_arg)]
    gamma: Option<f64>,
    #[arg(long)]
    cost: Option<f64>,
    #[arg(long, value_enum, default_value_t = FormArg::Ipd)]
    form: FormArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Lp)]
    format: FormatArg,
    /// Add the longest-path row of each zone to pairwise formulations.
    #[arg(long)]
    paths_with_ddc: bool,
    /// Extra vertex-disjoint path rows per zone.
    #[arg(long, default_value_t = 0)]
    extra_paths: usize,
    /// Only this zone (1-based) for dot output.
    #[arg(long)]
    zone: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("base").required(true).args(["instance", "spec"])))]
struct SweepArgs {
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Generator specification (JSON) to draw the base instance from.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Threshold of the base instance, kept fixed unless it is the swept parameter.
    #[arg(long, value_parser = gamma_arg)]
    gamma: Option<f64>,
    #[arg(long, value_enum)]
    vary: VaryArg,
    /// Comma-separated parameter values ("inf" allowed).
    #[arg(long, value_delimiter = ',', required = true, num_args = 1.., value_parser = value_arg)]
    values: Vec<f64>,
    /// Uniform facility cost at every point (ignored when sweeping f).
    #[arg(long, default_value_t = 0.0)]
    cost: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Skip the MNL comparison columns.
    #[arg(long)]
    no_compare: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Bb,
    Bruteforce,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum BranchingArg {
    MaxWeight,
    LowestIndex,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum HeuristicArg {
    Greedy,
    None,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FormArg {
    Ipd,
    Ipa,
    MicqpD,
    MicqpA,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FormatArg {
    Lp,
    Conic,
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum VaryArg {
    Gamma,
    Alpha,
    Xi,
    F,
}

fn gamma_arg(text: &str) -> Result<f64, String> {
    parse_gamma(text).map_err(|e| e.to_string())
}

fn value_arg(text: &str) -> Result<f64, String> {
    match text.trim() {
        "inf" | "Inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse().map_err(|_| format!("expected a number or \"inf\", got {text:?}")),
    }
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Data(Error),
    File(PathBuf, std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

fn read_instance(path: &Path) -> Result<Instance, Failure> {
    Instance::load(path).map_err(|e| match e {
        Error::Io(io) => Failure::File(path.to_path_buf(), io),
        other => Failure::Data(other),
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::File(path.to_path_buf(), e))
}

fn write_sidecar(manifest: &RunManifest, out: &Path) -> Result<(), Failure> {
    manifest
        .write_sidecar(out)
        .map(|_| ())
        .map_err(|e| Failure::File(out.to_path_buf(), e))
}

type CmdResult = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Export(a) => cmd_export(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::File(path, e)) => {
            eprintln!("error: {}: {e}", path.display());
            ExitCode::from(3)
        }
    }
}

fn gamma_value(g: f64) -> Value {
    if g.is_infinite() {
        Value::from("inf")
    } else {
        json!(g)
    }
}

fn instance_hash(inst: &Instance) -> String {
    sha256_hex(inst.to_json().as_bytes())
}

fn solve_config(a: &SolverArgs) -> SolveConfig {
    SolveConfig {
        gap_tolerance: a.gap,
        time_limit_seconds: a.time_limit,
        node_limit: a.node_limit,
        branching_rule: match a.branching {
            BranchingArg::MaxWeight => BranchingRule::MaxDemandWeightedAttraction,
            BranchingArg::LowestIndex => BranchingRule::LowestIndex,
        },
        heuristic: match a.heuristic {
            HeuristicArg::Greedy => Heuristic::GreedyLocalSearch,
            HeuristicArg::None => Heuristic::None,
        },
        threads: a.threads,
        ..SolveConfig::default()
    }
}

fn method(a: &SolverArgs) -> Method {
    match a.method {
        MethodArg::Bb => Method::Bb,
        MethodArg::Bruteforce => Method::Bruteforce,
    }
}

fn check_solver_args(a: &SolverArgs) -> Result<(), Failure> {
    solve_config(a)
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn solver_snapshot(a: &SolverArgs) -> Value {
    json!({
        "method": a.method,
        "gap": a.gap,
        "time_limit": a.time_limit,
        "node_limit": a.node_limit,
        "threads": a.threads,
        "branching": a.branching,
        "heuristic": a.heuristic,
    })
}

fn load_with(path: &Path, gamma: Option<f64>, cost: Option<f64>) -> Result<(Instance, Costs), Failure> {
    let mut inst = read_instance(path)?;
    if let Some(g) = gamma {
        inst = inst.with_gamma(g)?;
    }
    let costs = match cost {
        Some(f) => Costs::uniform(inst.n(), f)?,
        None => Costs::from_instance(&inst),
    };
    Ok((inst, costs))
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let spec = GeneratorSpec {
        zone_count: a.zones,
        locker_count: a.lockers,
        square_side: a.side,
        demand_range: [a.demand_lo, a.demand_hi],
        alpha: a.alpha,
        xi: a.xi,
        seed: a.seed,
    };
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let inst = Instance::generate(&spec)?.with_gamma(a.gamma)?;
    let inst = inst.with_costs(&Costs::uniform(inst.n(), a.cost)?)?;
    let config = json!({ "generator": spec, "gamma": gamma_value(a.gamma), "cost": a.cost });
    let manifest = RunManifest::new("gen", config, Some(instance_hash(&inst)));
    let hash = manifest.hash();
    let inst = inst.with_meta_entry("manifest_hash", Value::from(hash.clone()));
    write_file(&a.out, &inst.to_json())?;
    write_sidecar(&manifest, &a.out)?;
    println!(
        "wrote {} ({} zones, {} lockers, seed {}, manifest {})",
        a.out.display(),
        inst.m(),
        inst.n(),
        a.seed,
        &hash[..12]
    );
    Ok(ExitCode::SUCCESS)
}

/// Result file written by `solve`; every field but `manifest.timestamp_unix`
/// and `wall_time_seconds` is reproducible for single-threaded runs.
#[derive(Serialize)]
struct ResultFile<'a> {
    manifest_hash: String,
    manifest: &'a RunManifest,
    status: &'static str,
    gamma: Value,
    profit: f64,
    revenue: f64,
    facility_cost: f64,
    upper_bound: f64,
    gap: f64,
    facility_count: usize,
    nodes_explored: u64,
    wall_time_seconds: f64,
    /// `x[j]`: 1 when locker j is open.
    x: Vec<u8>,
    /// `y[i][j]`: 1 when zone i may use locker j.
    y: Vec<Vec<u8>>,
}

fn result_file<'a>(manifest: &'a RunManifest, inst: &Instance, r: &SolveResult) -> ResultFile<'a> {
    ResultFile {
        manifest_hash: manifest.hash(),
        manifest,
        status: r.status.label(),
        gamma: gamma_value(inst.gamma()),
        profit: r.profit,
        revenue: r.revenue,
        facility_cost: r.facility_cost,
        upper_bound: r.upper_bound,
        gap: r.gap,
        facility_count: r.location.count(),
        nodes_explored: r.nodes_explored,
        wall_time_seconds: r.wall_time_seconds,
        x: r.location.open.iter().map(|&o| u8::from(o)).collect(),
        y: r
            .restriction
            .allowed
            .iter()
            .map(|row| row.iter().map(|&a| u8::from(a)).collect())
            .collect(),
    }
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    check_solver_args(&a.solver)?;
    let (inst, costs) = load_with(&a.instance, a.gamma, a.cost)?;
    if a.seed_check {
        let regen = inst.regenerate()?;
        if !inst.same_data(&regen) {
            return Err(Failure::Data(Error::Validation {
                field: "meta.generator".into(),
                message: "regenerating from the recorded seed does not reproduce the instance data".into(),
            }));
        }
        println!("seed check passed");
    }
    let config = solve_config(&a.solver);
    let r = solver::solve(&inst, &costs, method(&a.solver), &config)?;

    let snapshot = json!({
        "gamma": gamma_value(inst.gamma()),
        "cost": a.cost,
        "solver": solver_snapshot(&a.solver),
        "seed_check": a.seed_check,
    });
    let manifest = RunManifest::new("solve", snapshot, Some(instance_hash(&read_instance(&a.instance)?)));
    if let Some(out) = &a.out {
        let text = jsonfmt::to_string(&result_file(&manifest, &inst, &r)).expect("result is serializable");
        write_file(out, &text)?;
        write_sidecar(&manifest, out)?;
    }

    println!("status      {}", r.status.label());
    println!("profit      {:.6}", r.profit);
    println!("revenue     {:.6}", r.revenue);
    println!("open (#F)   {}", r.location.count());
    println!("upper bound {:.6}", r.upper_bound);
    println!("gap         {:.4}%", r.gap * 100.0);
    println!("nodes       {}", r.nodes_explored);
    println!("time        {:.3} s", r.wall_time_seconds);
    if let Some(out) = &a.out {
        println!("wrote {}", out.display());
    }
    Ok(if r.status.hit_limit() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_export(a: ExportArgs) -> CmdResult {
    let (inst, costs) = load_with(&a.instance, a.gamma, a.cost)?;
    let opts = ModelOptions {
        paths_with_ddc: a.paths_with_ddc,
        extra_paths: a.extra_paths,
    };
    let snapshot = json!({
        "gamma": gamma_value(inst.gamma()),
        "cost": a.cost,
        "form": a.form,
        "format": a.format,
        "paths_with_ddc": a.paths_with_ddc,
        "extra_paths": a.extra_paths,
        "zone": a.zone,
    });
    let manifest = RunManifest::new("export", snapshot, Some(instance_hash(&read_instance(&a.instance)?)));
    let hash = manifest.hash();

    let text = if let FormatArg::Dot = a.format {
        let zones: Vec<usize> = match a.zone {
            Some(z) if z >= 1 && z <= inst.m() => vec![z - 1],
            Some(z) => return Err(Failure::Usage(format!("zone {z} is outside 1..={}", inst.m()))),
            None => (0..inst.m()).collect(),
        };
        let mut s = format!("// manifest {hash}\n");
        for i in zones {
            s.push_str(&DominanceGraph::build(&inst, i).to_dot());
        }
        s
    } else {
        let f = match a.form {
            FormArg::Ipd => model::build_ip_d(&inst, &costs, &opts)?,
            FormArg::Ipa => model::build_ip_a(&inst, &costs, &opts)?,
            FormArg::MicqpD => model::build_micqp(&inst, &costs, DominanceBlock::Ddc, &opts)?,
            FormArg::MicqpA => model::build_micqp(&inst, &costs, DominanceBlock::AdcPath, &opts)?,
        };
        let format = match a.format {
            FormatArg::Lp => ExportFormat::LpText,
            FormatArg::Conic => ExportFormat::ConicText,
            FormatArg::Json | FormatArg::Dot => ExportFormat::Json,
        };
        let export = f.export(format)?;
        for w in &export.warnings {
            eprintln!("warning: {w}");
        }
        match a.format {
            FormatArg::Lp => format!("\\ manifest {hash}\n{}", export.text),
            _ => export.text,
        }
    };
    write_file(&a.out, &text)?;
    write_sidecar(&manifest, &a.out)?;
    println!("wrote {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    check_solver_args(&a.solver)?;
    let (mut base, hash) = match (&a.instance, &a.spec) {
        (Some(path), _) => {
            let inst = read_instance(path)?;
            let h = instance_hash(&inst);
            (inst, h)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::File(path.clone(), e))?;
            let spec: GeneratorSpec = serde_json::from_str(&text).map_err(|e| Error::Parse {
                context: path.display().to_string(),
                message: e.to_string(),
            })?;
            let inst = Instance::generate(&spec)?;
            let h = instance_hash(&inst);
            (inst, h)
        }
        (None, None) => return Err(Failure::Usage("one of --instance or --spec is required".into())),
    };
    if let Some(g) = a.gamma {
        base = base.with_gamma(g)?;
    }
    let param = match a.vary {
        VaryArg::Gamma => SweepParam::Gamma,
        VaryArg::Alpha => SweepParam::Alpha,
        VaryArg::Xi => SweepParam::Xi,
        VaryArg::F => SweepParam::F,
    };
    let opts = SweepOptions {
        method: method(&a.solver),
        config: solve_config(&a.solver),
        compare_mnl: !a.no_compare,
    };
    let records = eval::sweep(&base, a.cost, param, &a.values, &opts)?;
    eval::save_sweep_csv(&a.out, &records).map_err(|e| match e {
        Error::Io(io) => Failure::File(a.out.clone(), io),
        other => Failure::Data(other),
    })?;

    let snapshot = json!({
        "gamma": gamma_value(base.gamma()),
        "vary": param.name(),
        "values": a.values.iter().map(|&v| gamma_value(v)).collect::<Vec<_>>(),
        "cost": a.cost,
        "solver": solver_snapshot(&a.solver),
        "compare_mnl": !a.no_compare,
    });
    let manifest = RunManifest::new("sweep", snapshot, Some(hash));
    write_sidecar(&manifest, &a.out)?;

    println!("{:>12} {:>14} {:>5} {:>10} {:>10}  status", param.name(), "profit", "#F", "delta %", "relloss %");
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
    for r in &records {
        println!(
            "{:>12} {:>14} {:>5} {:>10} {:>10}  {}",
            r.param_value,
            r.profit.map_or("-".to_string(), |p| format!("{p:.3}")),
            r.facility_count.map_or("-".to_string(), |f| f.to_string()),
            opt(r.delta_pct),
            opt(r.rel_loss_pct),
            r.status
        );
    }
    println!("wrote {}", a.out.display());
    let limited = records
        .iter()
        .any(|r| r.status == "TIME_LIMIT" || r.status == "NODE_LIMIT");
    Ok(if limited { ExitCode::from(1) } else { ExitCode::SUCCESS })
}
